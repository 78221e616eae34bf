#include "picardnet/model.hpp"

#include <cmath>
#include <stdexcept>

namespace picardnet {

void LevySpec::validate() const {
    if (intensity < 0.0 || !std::isfinite(intensity))
        throw std::invalid_argument("LevySpec: intensity must be finite and >= 0");
    if (intensity > 0.0 && !sampler)
        throw std::invalid_argument("LevySpec: positive intensity needs a mark sampler");
    if (intensity == 0.0)
        for (double v : g_mean)
            if (v != 0.0)
                throw std::invalid_argument("LevySpec: zero intensity forces zero compensator");
    if (g_second_moment_bound < 0.0)
        throw std::invalid_argument("LevySpec: second moment bound must be >= 0");
}

LevySpec no_jumps(int d) {
    LevySpec spec;
    spec.intensity = 0.0;
    spec.mark_dim = d;
    spec.g_mean = Vec(static_cast<std::size_t>(d), 0.0);
    spec.g_second_moment_bound = 0.0;
    return spec;
}

LevySpec gaussian_marks(double intensity, const Vec& mean, double stddev,
                        double g_second_moment_bound, const Vec& g_mean) {
    LevySpec spec;
    spec.intensity = intensity;
    spec.mark_dim = static_cast<int>(mean.size());
    spec.g_mean = g_mean;
    spec.g_second_moment_bound = g_second_moment_bound;
    spec.sampler = [mean, stddev](UniformCursor& cursor, Vec& out) {
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = mean[j] + stddev * inverse_normal_cdf(cursor.next());
    };
    spec.validate();
    return spec;
}

LevySpec constant_marks(double intensity, const Vec& mark,
                        double g_second_moment_bound, const Vec& g_mean) {
    LevySpec spec;
    spec.intensity = intensity;
    spec.mark_dim = static_cast<int>(mark.size());
    spec.g_mean = g_mean;
    spec.g_second_moment_bound = g_second_moment_bound;
    spec.sampler = [mark](UniformCursor&, Vec& out) { out = mark; };
    spec.validate();
    return spec;
}

void PideModel::validate() const {
    if (dim < 1) throw std::invalid_argument("PideModel: dimension must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("PideModel: horizon must be > 0");
    if (!(growth_constant >= 2.0))
        throw std::invalid_argument("PideModel: growth constant must be >= 2");
    if (!drift || !diffusion || !jump_scale || !jump_map || !nonlinearity || !terminal)
        throw std::invalid_argument("PideModel: all coefficient callables must be set");
    levy.validate();
}

namespace {

void require_finite(const Vec& v, const char* coeff, const Vec& point) {
    for (double x : v)
        if (!std::isfinite(x)) {
            std::string msg = std::string("non-finite output of ") + coeff + " at point (";
            for (std::size_t i = 0; i < point.size(); ++i) {
                if (i) msg += ",";
                msg += std::to_string(point[i]);
            }
            throw std::runtime_error(msg + ")");
        }
}

Vec gaussian_point(const RngContext& ctx, const ThetaIndex& theta, std::uint64_t base,
                   int d, double scale) {
    Vec x(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
        x[static_cast<std::size_t>(j)] =
            scale * inverse_normal_cdf(stream_uniform(
                        ctx, theta, StreamPurpose::Gaussian,
                        base + static_cast<std::uint64_t>(j)));
    return x;
}

}  // namespace

AssumptionReport validate_assumptions(const PideModel& model, int sample_count,
                                      const RngContext& ctx) {
    if (sample_count < 2)
        throw std::invalid_argument("validate_assumptions: need sample_count >= 2");
    model.validate();

    const int d = model.dim;
    const double c = model.growth_constant;
    const double T = model.horizon;
    const ThetaIndex theta = ThetaIndex::root().child(9, 1);

    AssumptionCheck lip_dyn{"lipschitz_beta_sigma_jump", 0.0, true};
    AssumptionCheck lip_f{"lipschitz_f", 0.0, true};
    AssumptionCheck lip_g{"lipschitz_g", 0.0, true};
    AssumptionCheck growth{"growth_at_zero", 0.0, true};

    const double nu2 = model.levy.g_second_moment_bound;
    for (int s = 0; s < sample_count; ++s) {
        const auto base = static_cast<std::uint64_t>(s) * 4096;
        const Vec x = gaussian_point(ctx, theta, base, d, 10.0);
        const Vec y = gaussian_point(ctx, theta, base + 1024, d, 10.0);
        Vec dxy(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dxy[i] = x[i] - y[i];
        const double dist2 = norm2_squared(dxy);
        if (dist2 == 0.0) continue;

        const Vec bx = model.drift(x);
        const Vec by = model.drift(y);
        require_finite(bx, "drift", x);
        require_finite(by, "drift", y);
        const Matrix sx = model.diffusion(x);
        const Matrix sy = model.diffusion(y);
        require_finite(sx.data(), "diffusion", x);
        require_finite(sy.data(), "diffusion", y);
        const Matrix fx = model.jump_scale(x);
        const Matrix fy = model.jump_scale(y);
        require_finite(fx.data(), "jump_scale", x);
        require_finite(fy.data(), "jump_scale", y);

        double num = 0.0;
        for (std::size_t i = 0; i < bx.size(); ++i) {
            const double e = bx[i] - by[i];
            num += e * e;
        }
        for (std::size_t i = 0; i < sx.data().size(); ++i) {
            const double e = sx.data()[i] - sy.data()[i];
            num += e * e;
        }
        // The jump integral of ||(F(x)-F(y)) G(z)||^2 against the Levy
        // measure is bounded through the Frobenius norm and the declared
        // second-moment bound; a conservative surrogate.
        double df2 = 0.0;
        for (std::size_t i = 0; i < fx.data().size(); ++i) {
            const double e = fx.data()[i] - fy.data()[i];
            df2 += e * e;
        }
        num += df2 * nu2;
        lip_dyn.worst_ratio = std::max(lip_dyn.worst_ratio, num / (c * dist2));

        const double w1 = 10.0 * inverse_normal_cdf(stream_uniform(
                                     ctx, theta, StreamPurpose::Gaussian, base + 2048));
        const double w2 = 10.0 * inverse_normal_cdf(stream_uniform(
                                     ctx, theta, StreamPurpose::Gaussian, base + 2049));
        if (w1 != w2) {
            const double fw1 = model.f_eval(w1);
            const double fw2 = model.f_eval(w2);
            if (!std::isfinite(fw1) || !std::isfinite(fw2))
                throw std::runtime_error("non-finite output of nonlinearity");
            const double r = (fw1 - fw2) * (fw1 - fw2) / (c * (w1 - w2) * (w1 - w2));
            lip_f.worst_ratio = std::max(lip_f.worst_ratio, r);
        }

        const double gx = model.g_eval(x);
        const double gy = model.g_eval(y);
        if (!std::isfinite(gx) || !std::isfinite(gy))
            throw std::runtime_error("non-finite output of terminal condition");
        const double gl = (gx - gy) * (gx - gy) /
                          (c * std::pow(static_cast<double>(d), c) / T * dist2);
        lip_g.worst_ratio = std::max(lip_g.worst_ratio, gl);
    }

    {
        const Vec zero(static_cast<std::size_t>(d), 0.0);
        const Vec b0 = model.drift(zero);
        const Matrix s0 = model.diffusion(zero);
        const Matrix f0m = model.jump_scale(zero);
        require_finite(b0, "drift", zero);
        const double f0 = model.f_eval(0.0);
        const double g0 = model.g_eval(zero);
        double num = norm2_squared(b0) + frobenius_squared(s0) +
                     frobenius_squared(f0m) * nu2 +
                     T * T * T * (std::fabs(f0) + 1.0) * (std::fabs(f0) + 1.0) +
                     T * g0 * g0;
        growth.worst_ratio = num / (c * std::pow(static_cast<double>(d), c));
    }

    AssumptionReport report;
    for (AssumptionCheck* chk : {&lip_dyn, &lip_f, &lip_g, &growth}) {
        chk->pass = chk->worst_ratio <= 1.0 + 1e-9;
        if (!chk->pass && report.violated.empty()) report.violated = chk->name;
        report.pass = report.pass && chk->pass;
        report.checks.push_back(*chk);
    }
    report.not_checked = {"jacobian_determinant_lower_bound",
                          "per_mark_jump_domination"};
    return report;
}

const char* benchmark_name(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::ConstAffine: return "const_affine";
        case BenchmarkId::LinearExp: return "linear_exp";
    }
    return "unknown";
}

std::optional<BenchmarkId> parse_benchmark(const std::string& name) {
    if (name == "const_affine") return BenchmarkId::ConstAffine;
    if (name == "linear_exp") return BenchmarkId::LinearExp;
    return std::nullopt;
}

namespace {

// Probe points for declared-shape validation of the benchmark catalog.
std::vector<Vec> probe_points(int d) {
    std::vector<Vec> pts;
    Vec a(static_cast<std::size_t>(d), 0.0);
    pts.push_back(a);
    for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i)] = 0.7 * (i + 1);
    pts.push_back(a);
    for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i)] = -1.3 + 0.4 * i;
    pts.push_back(a);
    return pts;
}

}  // namespace

double benchmark_solution(const PideModel& model, BenchmarkId id, double t,
                          const Vec& x) {
    const double T = model.horizon;
    if (t < 0.0 || t > T)
        throw std::invalid_argument("benchmark_solution: t outside [0,T]");
    if (static_cast<int>(x.size()) != model.dim)
        throw std::invalid_argument("benchmark_solution: point dimension mismatch");
    const auto pts = probe_points(model.dim);
    switch (id) {
        case BenchmarkId::ConstAffine: {
            const double g0 = model.g_eval(pts[0]);
            const double f0 = model.f_eval(0.0);
            for (const Vec& p : pts)
                if (std::fabs(model.g_eval(p) - g0) > 1e-12 * (1.0 + std::fabs(g0)))
                    throw std::invalid_argument(
                        "benchmark_solution: ConstAffine needs a constant terminal condition");
            for (double w : {0.0, 1.0, -2.5})
                if (std::fabs(model.f_eval(w) - f0) > 1e-12 * (1.0 + std::fabs(f0)))
                    throw std::invalid_argument(
                        "benchmark_solution: ConstAffine needs a constant nonlinearity");
            return g0 + f0 * (T - t);
        }
        case BenchmarkId::LinearExp: {
            for (const Vec& p : pts)
                if (norm2_squared(model.drift(p)) > 0.0)
                    throw std::invalid_argument(
                        "benchmark_solution: LinearExp needs driftless dynamics");
            if (std::fabs(model.f_eval(1.25) - 1.25) > 1e-12 ||
                std::fabs(model.f_eval(-0.5) + 0.5) > 1e-12)
                throw std::invalid_argument(
                    "benchmark_solution: LinearExp needs f(u) = u");
            return model.g_eval(x) * std::exp(T - t);
        }
    }
    throw std::invalid_argument("benchmark_solution: unknown benchmark");
}

namespace {

std::function<Vec(const Vec&)> make_drift_fn(int d,
                                             const std::optional<AffineVectorCoeff>& drift) {
    if (!drift)
        return [d](const Vec&) { return Vec(static_cast<std::size_t>(d), 0.0); };
    const Matrix m = drift->matrix;
    const Vec b = drift->offset;
    return [m, b](const Vec& x) {
        Vec y = m.apply(x);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
        return y;
    };
}

std::function<Matrix(const Vec&)> make_const_matrix_fn(int d,
                                                       const std::optional<Matrix>& mat) {
    const Matrix a = mat ? *mat : Matrix(static_cast<std::size_t>(d),
                                         static_cast<std::size_t>(d));
    return [a](const Vec&) { return a; };
}

}  // namespace

PideModel make_const_affine_model(int d, double horizon, double g0, double f0,
                                  const std::optional<AffineVectorCoeff>& drift,
                                  const std::optional<Matrix>& diffusion,
                                  const std::optional<Matrix>& jump_scale,
                                  const LevySpec* levy) {
    PideModel model;
    model.dim = d;
    model.horizon = horizon;
    model.drift = make_drift_fn(d, drift);
    model.diffusion = make_const_matrix_fn(d, diffusion);
    model.jump_scale = make_const_matrix_fn(d, jump_scale);
    model.jump_map = [](const Vec& z) { return z; };
    model.levy = levy ? *levy : no_jumps(d);
    model.nonlinearity = [f0](double) { return f0; };
    model.terminal = [g0](const Vec&) { return g0; };
    model.validate();
    return model;
}

PideModel make_linear_exp_model(int d, double horizon, const Vec& g_weights,
                                double g_offset, const Matrix& diffusion,
                                const LevySpec* levy) {
    if (static_cast<int>(g_weights.size()) != d)
        throw std::invalid_argument("make_linear_exp_model: weight length mismatch");
    PideModel model;
    model.dim = d;
    model.horizon = horizon;
    model.drift = [d](const Vec&) { return Vec(static_cast<std::size_t>(d), 0.0); };
    model.diffusion = [diffusion](const Vec&) { return diffusion; };
    const Matrix eye = Matrix::identity(static_cast<std::size_t>(d));
    model.jump_scale = [eye](const Vec&) { return eye; };
    model.jump_map = [](const Vec& z) { return z; };
    model.levy = levy ? *levy : no_jumps(d);
    model.nonlinearity = [](double u) { return u; };
    model.terminal = [g_weights, g_offset](const Vec& x) {
        return dot(g_weights, x) + g_offset;
    };
    model.validate();
    return model;
}

namespace {

// Exact three-layer network for x -> M x + b via the (z+, z-) split.
ReluNetwork affine_vector_net(const Matrix& m, const Vec& b) {
    const std::size_t out = m.rows();
    const std::size_t in = m.cols();
    Matrix w1(2 * out, in);
    for (std::size_t i = 0; i < out; ++i)
        for (std::size_t j = 0; j < in; ++j) {
            w1(i, j) = m(i, j);
            w1(out + i, j) = -m(i, j);
        }
    Matrix w2(out, 2 * out);
    for (std::size_t i = 0; i < out; ++i) {
        w2(i, i) = 1.0;
        w2(i, out + i) = -1.0;
    }
    std::vector<Layer> layers;
    layers.push_back({std::move(w1), Vec(2 * out, 0.0)});
    layers.push_back({std::move(w2), b});
    return ReluNetwork(std::move(layers));
}

// Three-layer network with constant value; used for the directional
// coefficient factories of x-independent matrices.
ReluNetwork constant_vector_net(std::size_t in, const Vec& value) {
    std::vector<Layer> layers;
    layers.push_back({Matrix(1, in), Vec(1, 0.0)});
    layers.push_back({Matrix(value.size(), 1), value});
    return ReluNetwork(std::move(layers));
}

ReluNetwork affine_scalar_net(const Vec& weights, double offset) {
    const std::size_t in = weights.size();
    Matrix w1(2, in);
    for (std::size_t j = 0; j < in; ++j) {
        w1(0, j) = weights[j];
        w1(1, j) = -weights[j];
    }
    Matrix w2(1, 2);
    w2(0, 0) = 1.0;
    w2(0, 1) = -1.0;
    std::vector<Layer> layers;
    layers.push_back({std::move(w1), Vec(2, 0.0)});
    layers.push_back({std::move(w2), Vec(1, offset)});
    return ReluNetwork(std::move(layers));
}

}  // namespace

void attach_affine_networks(PideModel& model, const AffineVectorCoeff& drift,
                            const Matrix& diffusion, const Matrix& jump_scale,
                            const Vec& g_weights, double g_offset, double f_slope,
                            double f_intercept) {
    const auto d = static_cast<std::size_t>(model.dim);
    NetworkCoefficientSet nets;
    const bool drift_zero = frobenius_squared(drift.matrix) == 0.0 &&
                            norm2_squared(drift.offset) == 0.0;
    nets.drift_net = drift_zero
                         ? zero_net(model.dim, model.dim, 3)
                         : affine_vector_net(drift.matrix, drift.offset);
    nets.diffusion_dir_net = [diffusion, d](const Vec& v) {
        return constant_vector_net(d, diffusion.apply(v));
    };
    nets.jump_dir_net = [jump_scale, d](const Vec& v) {
        return constant_vector_net(d, jump_scale.apply(v));
    };
    nets.terminal_net = affine_scalar_net(g_weights, g_offset);
    nets.nonlinearity_net = affine_scalar_net(Vec{f_slope}, f_intercept);
    model.nets = std::move(nets);
    model.exactly_networked = true;
}

}  // namespace picardnet
