#include "picardnet/config.hpp"

#include <cmath>
#include <fstream>

namespace picardnet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

double get_number(const json& obj, const std::string& field, const std::string& ctx) {
    if (!obj.contains(field)) fail(ctx + "." + field, "missing");
    if (!obj[field].is_number()) fail(ctx + "." + field, "expected a number");
    return obj[field].get<double>();
}

Vec get_vector(const json& obj, const std::string& field, const std::string& ctx,
               std::size_t expected) {
    if (!obj.contains(field) || !obj[field].is_array())
        fail(ctx + "." + field, "expected an array of numbers");
    Vec v;
    for (const auto& e : obj[field]) {
        if (!e.is_number()) fail(ctx + "." + field, "expected numbers");
        v.push_back(e.get<double>());
    }
    if (expected && v.size() != expected)
        fail(ctx + "." + field, "expected length " + std::to_string(expected));
    return v;
}

Matrix get_matrix(const json& obj, const std::string& field, const std::string& ctx,
                  std::size_t rows, std::size_t cols) {
    if (!obj.contains(field) || !obj[field].is_array())
        fail(ctx + "." + field, "expected a row-major nested array");
    const auto& a = obj[field];
    if (a.size() != rows) fail(ctx + "." + field, "expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!a[i].is_array() || a[i].size() != cols)
            fail(ctx + "." + field, "row " + std::to_string(i) + " must have " +
                                        std::to_string(cols) + " entries");
        for (std::size_t j = 0; j < cols; ++j) {
            if (!a[i][j].is_number()) fail(ctx + "." + field, "expected numbers");
            m(i, j) = a[i][j].get<double>();
        }
    }
    return m;
}

std::string get_kind(const json& obj, const std::string& ctx) {
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string())
        fail(ctx, "expected an object with a 'kind' string");
    return obj["kind"].get<std::string>();
}

AffineVectorCoeff parse_drift(const json& spec, int d, const std::string& ctx) {
    const auto du = static_cast<std::size_t>(d);
    AffineVectorCoeff coeff{Matrix(du, du), Vec(du, 0.0)};
    if (!spec.is_object()) return coeff;
    const std::string kind = get_kind(spec, ctx);
    if (kind == "zero") return coeff;
    if (kind == "constant") {
        coeff.offset = get_vector(spec, "value", ctx, du);
        return coeff;
    }
    if (kind == "linear") {
        coeff.matrix = get_matrix(spec, "matrix", ctx, du, du);
        return coeff;
    }
    if (kind == "affine") {
        coeff.matrix = get_matrix(spec, "matrix", ctx, du, du);
        coeff.offset = get_vector(spec, "offset", ctx, du);
        return coeff;
    }
    fail(ctx, "unknown kind '" + kind + "'");
}

Matrix parse_const_matrix(const json& spec, int d, const std::string& ctx) {
    const auto du = static_cast<std::size_t>(d);
    if (!spec.is_object()) return Matrix(du, du);
    const std::string kind = get_kind(spec, ctx);
    if (kind == "zero") return Matrix(du, du);
    if (kind == "identity") return Matrix::identity(du);
    if (kind == "scaled_identity") {
        Matrix m = Matrix::identity(du);
        const double s = get_number(spec, "scale", ctx);
        for (std::size_t i = 0; i < du; ++i) m(i, i) = s;
        return m;
    }
    if (kind == "constant") return get_matrix(spec, "matrix", ctx, du, du);
    fail(ctx, "unknown kind '" + kind + "'");
}

struct ScalarCoeff {
    Vec weights;
    double offset = 0.0;
};

ScalarCoeff parse_terminal(const json& spec, int d, const std::string& ctx) {
    const auto du = static_cast<std::size_t>(d);
    ScalarCoeff coeff{Vec(du, 0.0), 0.0};
    if (!spec.is_object()) fail(ctx, "terminal condition 'g' is required");
    const std::string kind = get_kind(spec, ctx);
    if (kind == "constant") {
        coeff.offset = get_number(spec, "value", ctx);
        return coeff;
    }
    if (kind == "linear") {
        coeff.weights = get_vector(spec, "weights", ctx, du);
        return coeff;
    }
    if (kind == "affine") {
        coeff.weights = get_vector(spec, "weights", ctx, du);
        coeff.offset = get_number(spec, "offset", ctx);
        return coeff;
    }
    fail(ctx, "unknown kind '" + kind + "'");
}

struct NonlinCoeff {
    double slope = 0.0;
    double intercept = 0.0;
};

NonlinCoeff parse_nonlinearity(const json& spec, const std::string& ctx) {
    NonlinCoeff coeff;
    if (!spec.is_object()) fail(ctx, "nonlinearity 'f' is required");
    const std::string kind = get_kind(spec, ctx);
    if (kind == "zero") return coeff;
    if (kind == "constant") {
        coeff.intercept = get_number(spec, "value", ctx);
        return coeff;
    }
    if (kind == "linear") {
        coeff.slope = get_number(spec, "slope", ctx);
        return coeff;
    }
    if (kind == "affine") {
        coeff.slope = get_number(spec, "slope", ctx);
        coeff.intercept = get_number(spec, "intercept", ctx);
        return coeff;
    }
    fail(ctx, "unknown kind '" + kind + "'");
}

LevySpec parse_jumps(const json& spec, int d, const std::string& ctx) {
    if (!spec.is_object()) return no_jumps(d);
    const double intensity = get_number(spec, "intensity", ctx);
    if (intensity == 0.0) return no_jumps(d);
    if (!spec.contains("marks")) fail(ctx + ".marks", "missing");
    const json& marks = spec["marks"];
    const std::string kind = get_kind(marks, ctx + ".marks");
    const auto du = static_cast<std::size_t>(d);

    Vec g_mean;
    double second_moment = 0.0;
    LevySpec levy;
    if (kind == "gaussian") {
        const Vec mean = get_vector(marks, "mean", ctx + ".marks", du);
        const double stddev = get_number(marks, "stddev", ctx + ".marks");
        g_mean = scale(intensity, mean);
        second_moment =
            intensity * (norm2_squared(mean) + static_cast<double>(d) * stddev * stddev);
        levy = gaussian_marks(intensity, mean, stddev, second_moment, g_mean);
    } else if (kind == "constant") {
        const Vec value = get_vector(marks, "value", ctx + ".marks", du);
        g_mean = scale(intensity, value);
        second_moment = intensity * norm2_squared(value);
        levy = constant_marks(intensity, value, second_moment, g_mean);
    } else {
        fail(ctx + ".marks", "unknown kind '" + kind + "'");
    }
    if (spec.contains("g_mean"))
        levy.g_mean = get_vector(spec, "g_mean", ctx, du);
    if (spec.contains("g_second_moment_bound"))
        levy.g_second_moment_bound = get_number(spec, "g_second_moment_bound", ctx);
    return levy;
}

}  // namespace

PideModel model_from_json(const nlohmann::json& spec) {
    if (!spec.is_object()) throw ConfigError("config field 'model': expected an object");
    const int d = static_cast<int>(get_number(spec, "d", "model"));
    if (d < 1) fail("model.d", "must be >= 1");
    const double T = get_number(spec, "T", "model");
    const double c = spec.contains("c") ? get_number(spec, "c", "model") : 2.0;

    const AffineVectorCoeff drift =
        parse_drift(spec.value("drift", json()), d, "model.drift");
    const Matrix diffusion =
        parse_const_matrix(spec.value("diffusion", json()), d, "model.diffusion");
    const Matrix jump_scale =
        parse_const_matrix(spec.value("jump_scale", json()), d, "model.jump_scale");
    if (!spec.contains("g")) fail("model.g", "missing");
    const ScalarCoeff g = parse_terminal(spec["g"], d, "model.g");
    if (!spec.contains("f")) fail("model.f", "missing");
    const NonlinCoeff f = parse_nonlinearity(spec["f"], "model.f");
    const LevySpec levy = parse_jumps(spec.value("jumps", json()), d, "model.jumps");

    PideModel model;
    model.dim = d;
    model.horizon = T;
    model.growth_constant = c;
    {
        const Matrix dm = drift.matrix;
        const Vec doff = drift.offset;
        model.drift = [dm, doff](const Vec& x) {
            Vec y = dm.apply(x);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] += doff[i];
            return y;
        };
    }
    model.diffusion = [diffusion](const Vec&) { return diffusion; };
    model.jump_scale = [jump_scale](const Vec&) { return jump_scale; };
    model.jump_map = [](const Vec& z) { return z; };
    model.levy = levy;
    model.nonlinearity = [f](double u) { return f.slope * u + f.intercept; };
    model.terminal = [g](const Vec& x) { return dot(g.weights, x) + g.offset; };
    model.validate();

    if (spec.value("networked", false))
        attach_affine_networks(model, drift, diffusion, jump_scale, g.weights,
                               g.offset, f.slope, f.intercept);
    return model;
}

LoadedConfig load_config_json(const nlohmann::json& root) {
    if (!root.is_object()) throw ConfigError("config root: expected an object");
    LoadedConfig cfg;
    cfg.raw = root;
    if (root.contains("seed")) {
        if (!root["seed"].is_number_integer())
            fail("seed", "expected an integer");
        cfg.seed = root["seed"].get<std::uint64_t>();
    }
    cfg.workers = root.value("workers", 1);
    if (cfg.workers < 1) fail("workers", "must be >= 1");
    cfg.deterministic = root.value("deterministic", false);
    cfg.out_dir = root.value("out_dir", std::string("."));
    if (root.contains("model")) {
        cfg.model = model_from_json(root["model"]);
        if (root["model"].contains("benchmark")) {
            const auto name = root["model"]["benchmark"].get<std::string>();
            cfg.benchmark = parse_benchmark(name);
            if (!cfg.benchmark) fail("model.benchmark", "unknown id '" + name + "'");
        }
    }
    return cfg;
}

LoadedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json root;
    try {
        in >> root;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
    return load_config_json(root);
}

}  // namespace picardnet
