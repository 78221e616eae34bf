#include "picardnet/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace picardnet {

namespace {

std::int64_t ipow(std::int64_t base, std::int64_t exp) {
    std::int64_t r = 1;
    for (std::int64_t i = 0; i < exp; ++i) r *= base;
    return r;
}

const NetworkCoefficientSet& require_nets(const PideModel& model) {
    if (!model.nets)
        throw std::invalid_argument("compiler: model has no coefficient networks");
    return *model.nets;
}

/// Coefficient nets lifted to one common depth, plus the derived
/// shape constants reused across the whole compilation.
struct HarmonizedCoefficients {
    ReluNetwork drift;
    std::function<ReluNetwork(const Vec&)> diffusion_dir;
    std::function<ReluNetwork(const Vec&)> jump_dir;
    ReluNetwork terminal;
    ReluNetwork nonlinearity;
    std::int64_t common_depth = 0;   // shared depth of drift/diffusion/jump nets
    std::int64_t step_depth = 0;     // L = K (common_depth - 1) + 1
    std::int64_t depth_f = 0;
    std::int64_t depth_g = 0;
};

HarmonizedCoefficients harmonize(const PideModel& model, std::int64_t grid_steps) {
    const NetworkCoefficientSet& nets = require_nets(model);
    const Vec zero_dir(static_cast<std::size_t>(model.dim), 0.0);
    const auto depth_beta = static_cast<std::int64_t>(nets.drift_net.dims().length());
    const auto depth_sigma =
        static_cast<std::int64_t>(nets.diffusion_dir_net(zero_dir).dims().length());
    const auto depth_jump =
        static_cast<std::int64_t>(nets.jump_dir_net(zero_dir).dims().length());
    const std::int64_t common =
        std::max({depth_beta, depth_sigma, depth_jump, std::int64_t{3}});

    HarmonizedCoefficients h;
    h.common_depth = common;
    h.step_depth = grid_steps * (common - 1) + 1;
    h.depth_f = static_cast<std::int64_t>(nets.nonlinearity_net.dims().length());
    h.depth_g = static_cast<std::int64_t>(nets.terminal_net.dims().length());
    h.drift = extend_depth(nets.drift_net, common - depth_beta);
    const auto sigma_factory = nets.diffusion_dir_net;
    const std::int64_t sigma_pad = common - depth_sigma;
    h.diffusion_dir = [sigma_factory, sigma_pad](const Vec& v) {
        return extend_depth(sigma_factory(v), sigma_pad);
    };
    const auto jump_factory = nets.jump_dir_net;
    const std::int64_t jump_pad = common - depth_jump;
    h.jump_dir = [jump_factory, jump_pad](const Vec& v) {
        return extend_depth(jump_factory(v), jump_pad);
    };
    h.terminal = nets.terminal_net;
    h.nonlinearity = nets.nonlinearity_net;
    return h;
}

/// One Euler step as a network: identity + drift * dt + diffusion
/// increment + compensated jump, all as a same-depth parallel sum.
ReluNetwork step_net(const PideModel& model, const HarmonizedCoefficients& h,
                     const SegmentDraw& draw) {
    const std::vector<ReluNetwork> parts = {
        identity_net(model.dim, h.common_depth),
        h.drift,
        h.diffusion_dir(draw.brownian),
        h.jump_dir(draw.compensated_jump),
    };
    const std::vector<double> coeffs = {1.0, draw.length, 1.0, 1.0};
    return sum_nets(coeffs, parts);
}

ReluNetwork inactive_step_net(const PideModel& model, const HarmonizedCoefficients& h) {
    const Vec zero(static_cast<std::size_t>(model.dim), 0.0);
    const std::vector<ReluNetwork> parts = {
        identity_net(model.dim, h.common_depth),
        h.drift,
        h.diffusion_dir(zero),
        h.jump_dir(zero),
    };
    const std::vector<double> coeffs = {1.0, 0.0, 0.0, 0.0};
    return sum_nets(coeffs, parts);
}

ReluNetwork trajectory_net(const PideModel& model, const HarmonizedCoefficients& h,
                           const ThetaIndex& theta, std::int64_t grid_steps, double t,
                           double s, const RngContext& ctx) {
    const auto draws = segment_draws(model, ctx, theta, grid_steps, t, s);
    std::map<std::int64_t, const SegmentDraw*> by_cell;
    for (const SegmentDraw& d : draws) by_cell[d.cell] = &d;

    ReluNetwork chain;
    bool first = true;
    for (std::int64_t k = 1; k <= grid_steps; ++k) {
        const auto it = by_cell.find(k);
        ReluNetwork step = (it != by_cell.end()) ? step_net(model, h, *it->second)
                                                 : inactive_step_net(model, h);
        chain = first ? std::move(step) : compose_nets(step, chain);
        first = false;
    }
    return chain;
}

struct MlpCompiler {
    const PideModel& model;
    const HarmonizedCoefficients& h;
    RngContext ctx;
    std::int64_t m;
    std::int64_t grid_steps;

    std::int64_t target_depth(std::int64_t n) const {
        return (n + 1) * h.step_depth + n * (h.depth_f - 2) + h.depth_g - 1;
    }

    /// Identity padding inserted into a chain; index arithmetic follows
    /// the depth bookkeeping of the recursion.
    ReluNetwork scalar_pad(std::int64_t entries) const {
        return identity_net(1, entries);
    }

    ReluNetwork compile(const ThetaIndex& theta, double t, std::int64_t n) const {
        if (n == 0)
            return zero_net(model.dim, 1, h.step_depth + h.depth_g - 1);
        const double T = model.horizon;
        const std::int64_t pad_unit = h.depth_f - 2 + h.step_depth;

        std::vector<ReluNetwork> terms;
        std::vector<double> coeffs;

        // Terminal averages, padded on top to the target depth.
        const std::int64_t m_n = ipow(m, n);
        for (std::int64_t i = 1; i <= m_n; ++i) {
            const ReluNetwork traj = trajectory_net(model, h, theta.child(0, -i),
                                                    grid_steps, t, T, ctx);
            ReluNetwork term = compose_nets(scalar_pad(n * pad_unit + 1),
                                            compose_nets(h.terminal, traj));
            terms.push_back(std::move(term));
            coeffs.push_back(1.0 / static_cast<double>(m_n));
        }

        // Scenario data shared between the paired correction terms.
        struct Branch {
            double tau;
            ReluNetwork traj;
        };
        std::map<std::pair<std::int64_t, std::int64_t>, Branch> branches;
        auto branch = [&](std::int64_t level, std::int64_t i) -> const Branch& {
            const auto key = std::make_pair(level, i);
            auto it = branches.find(key);
            if (it == branches.end()) {
                const ThetaIndex th = theta.child(level, i);
                const double tau =
                    time_from_fraction(t, sample_time_fraction(ctx, th), T);
                ReluNetwork traj =
                    trajectory_net(model, h, th, grid_steps, t, tau, ctx);
                it = branches.emplace(key, Branch{tau, std::move(traj)}).first;
            }
            return it->second;
        };

        // Top correction level n-1 composes without padding.
        for (std::int64_t i = 1; i <= m; ++i) {
            const Branch& b = branch(n - 1, i);
            const ReluNetwork inner = compile(theta.child(n - 1, i), b.tau, n - 1);
            terms.push_back(compose_nets(h.nonlinearity, compose_nets(inner, b.traj)));
            coeffs.push_back((T - t) / static_cast<double>(m));
        }

        // Lower levels, positive part, padded between f and the inner net.
        for (std::int64_t level = 0; level <= n - 2; ++level) {
            const std::int64_t samples = ipow(m, n - level);
            for (std::int64_t i = 1; i <= samples; ++i) {
                const Branch& b = branch(level, i);
                const ReluNetwork inner = compile(theta.child(level, i), b.tau, level);
                ReluNetwork padded =
                    compose_nets(scalar_pad((n - 1 - level) * pad_unit + 1),
                                 compose_nets(inner, b.traj));
                terms.push_back(compose_nets(h.nonlinearity, padded));
                coeffs.push_back((T - t) / static_cast<double>(samples));
            }
        }

        // Paired lower-level estimates, negative part, at the same
        // frozen time and trajectory as their positive partners.
        for (std::int64_t level = 1; level <= n - 1; ++level) {
            const std::int64_t samples = ipow(m, n - level);
            for (std::int64_t i = 1; i <= samples; ++i) {
                const Branch& b = branch(level, i);
                const ReluNetwork inner =
                    compile(theta.child(-level, i), b.tau, level - 1);
                ReluNetwork padded =
                    compose_nets(scalar_pad((n - level) * pad_unit + 1),
                                 compose_nets(inner, b.traj));
                terms.push_back(compose_nets(h.nonlinearity, padded));
                coeffs.push_back(-(T - t) / static_cast<double>(samples));
            }
        }

        const std::int64_t want = target_depth(n);
        for (const ReluNetwork& term : terms)
            if (static_cast<std::int64_t>(term.dims().length()) != want)
                throw std::logic_error(
                    "compile_mlp: parallel-sum operand depth " +
                    std::to_string(term.dims().length()) + " != expected " +
                    std::to_string(want));
        return sum_nets(coeffs, terms);
    }
};

/// Dimension-only mirror of MlpCompiler::compile.
struct DimsOnly {
    std::int64_t d, m, grid_steps, step_depth, depth_f, depth_g;
    DimVector step_dims;

    DimVector trajectory() const {
        DimVector chain = step_dims;
        for (std::int64_t k = 1; k < grid_steps; ++k)
            chain = dim_compose(step_dims, chain);
        return chain;
    }

    DimVector compile(std::int64_t n) const {
        if (n == 0) {
            DimVector z;
            z.dims.assign(static_cast<std::size_t>(step_depth + depth_g - 1), 1);
            z.dims.front() = d;
            return z;
        }
        const std::int64_t pad_unit = depth_f - 2 + step_depth;
        const DimVector traj = trajectory();
        auto pad = [](std::int64_t entries) { return standard_dim(entries, 1); };

        std::vector<DimVector> terms;
        for (std::int64_t i = 1; i <= ipow(m, n); ++i)
            terms.push_back(dim_compose(pad(n * pad_unit + 1),
                                        dim_compose(g_dims_, traj)));
        for (std::int64_t i = 1; i <= m; ++i)
            terms.push_back(dim_compose(f_dims_, dim_compose(compile(n - 1), traj)));
        for (std::int64_t level = 0; level <= n - 2; ++level)
            for (std::int64_t i = 1; i <= ipow(m, n - level); ++i)
                terms.push_back(dim_compose(
                    f_dims_,
                    dim_compose(pad((n - 1 - level) * pad_unit + 1),
                                dim_compose(compile(level), traj))));
        for (std::int64_t level = 1; level <= n - 1; ++level)
            for (std::int64_t i = 1; i <= ipow(m, n - level); ++i)
                terms.push_back(dim_compose(
                    f_dims_,
                    dim_compose(pad((n - level) * pad_unit + 1),
                                dim_compose(compile(level - 1), traj))));
        DimVector acc = terms.front();
        for (std::size_t i = 1; i < terms.size(); ++i) acc = dim_sum(acc, terms[i]);
        return acc;
    }

    DimVector f_dims_;
    DimVector g_dims_;
};

}  // namespace

ReluNetwork build_pl_f_network(const std::function<double(double)>& f,
                               double lipschitz_bound, double radius, double grid_h) {
    if (!(radius > 0.0) || !(grid_h > 0.0) || grid_h > radius)
        throw std::invalid_argument("build_pl_f_network: need 0 < h <= R");
    const auto cells = static_cast<std::int64_t>(
        std::ceil(2.0 * radius / grid_h - 1e-12));
    std::vector<double> knots(static_cast<std::size_t>(cells + 1));
    std::vector<double> values(knots.size());
    for (std::size_t j = 0; j < knots.size(); ++j) {
        knots[j] = -radius + static_cast<double>(j) * grid_h;
        values[j] = f(knots[j]);
        if (!std::isfinite(values[j]))
            throw std::invalid_argument("build_pl_f_network: f non-finite at breakpoint " +
                                        std::to_string(knots[j]));
    }
    std::vector<double> slopes(static_cast<std::size_t>(cells));
    for (std::size_t j = 0; j < slopes.size(); ++j) {
        slopes[j] = (values[j + 1] - values[j]) / grid_h;
        if (std::fabs(slopes[j]) > lipschitz_bound * (1.0 + 1e-9))
            throw std::invalid_argument(
                "build_pl_f_network: f is steeper than the declared Lipschitz bound near " +
                std::to_string(knots[j]));
    }

    // Hidden units: +/-(w - knot_0) carry the leading linear piece, one
    // kink unit per interior knot adds the slope change.
    const std::size_t width = 2 + slopes.size() - 1;
    Matrix w1(width, 1);
    Vec b1(width);
    w1(0, 0) = 1.0;
    b1[0] = -knots.front();
    w1(1, 0) = -1.0;
    b1[1] = knots.front();
    for (std::size_t j = 1; j < slopes.size(); ++j) {
        w1(1 + j, 0) = 1.0;
        b1[1 + j] = -knots[j];
    }
    Matrix w2(1, width);
    w2(0, 0) = slopes.front();
    w2(0, 1) = -slopes.front();
    for (std::size_t j = 1; j < slopes.size(); ++j)
        w2(0, 1 + j) = slopes[j] - slopes[j - 1];
    std::vector<Layer> layers;
    layers.push_back({std::move(w1), std::move(b1)});
    layers.push_back({std::move(w2), Vec(1, values.front())});
    return ReluNetwork(std::move(layers));
}

ReluNetwork compile_em_trajectory(const PideModel& model, const ThetaIndex& theta,
                                  std::int64_t grid_steps, double t, double s,
                                  const RngContext& ctx) {
    const HarmonizedCoefficients h = harmonize(model, grid_steps);
    return trajectory_net(model, h, theta, grid_steps, t, s, ctx);
}

std::int64_t predicted_depth(std::int64_t n, std::int64_t grid_steps,
                             std::int64_t depth_beta, std::int64_t depth_sigma,
                             std::int64_t depth_jump, std::int64_t depth_f,
                             std::int64_t depth_g) {
    const std::int64_t common = std::max({depth_beta, depth_sigma, depth_jump});
    const std::int64_t step = grid_steps * (common - 1) + 1;
    return (n + 1) * step + n * (depth_f - 2) + depth_g - 1;
}

double width_constant(const PideModel& model) {
    // Uses the depth-harmonized dynamics nets; for inputs that already
    // share a depth this is exactly 2d plus the five raw sup-norms.
    const HarmonizedCoefficients h = harmonize(model, 1);
    const Vec zero_dir(static_cast<std::size_t>(model.dim), 0.0);
    return 2.0 * model.dim +
           static_cast<double>(h.nonlinearity.dims().max_width()) +
           static_cast<double>(h.terminal.dims().max_width()) +
           static_cast<double>(h.drift.dims().max_width()) +
           static_cast<double>(h.diffusion_dir(zero_dir).dims().max_width()) +
           static_cast<double>(h.jump_dir(zero_dir).dims().max_width());
}

DimVector predicted_mlp_dims(const PideModel& model, std::int64_t n, std::int64_t m,
                             std::int64_t grid_steps) {
    const HarmonizedCoefficients h = harmonize(model, grid_steps);
    const Vec zero_dir(static_cast<std::size_t>(model.dim), 0.0);
    DimVector step = dim_sum(
        dim_sum(dim_sum(standard_dim(h.common_depth, model.dim), h.drift.dims()),
                h.diffusion_dir(zero_dir).dims()),
        h.jump_dir(zero_dir).dims());
    DimsOnly dims{model.dim,  m,         grid_steps,
                  h.step_depth, h.depth_f, h.depth_g,
                  step,         h.nonlinearity.dims(), h.terminal.dims()};
    return dims.compile(n);
}

CompiledMlp compile_mlp(const PideModel& model, const ScenarioBinding& binding,
                        const CompileOptions& options) {
    if (binding.level < 0 || binding.base < 1 || binding.grid_steps < 1)
        throw std::invalid_argument("compile_mlp: need n >= 0, m >= 1, K >= 1");
    if (binding.t < 0.0 || binding.t > model.horizon)
        throw std::invalid_argument("compile_mlp: t outside [0,T]");
    const DimVector predicted =
        predicted_mlp_dims(model, binding.level, binding.base, binding.grid_steps);
    if (predicted.param_count() > options.param_ceiling)
        throw ResourceLimitError(predicted.param_count(), options.param_ceiling);

    const HarmonizedCoefficients h = harmonize(model, binding.grid_steps);
    MlpCompiler compiler{model, h,
                         RngContext(binding.master_seed, options.draw_log),
                         binding.base, binding.grid_steps};

    CompiledMlp out;
    out.network = compiler.compile(binding.root_theta, binding.t, binding.level);
    out.predicted_depth = compiler.target_depth(binding.level);
    out.predicted_params = predicted.param_count();
    out.width_constant = width_constant(model);
    out.predicted_width_bound =
        out.width_constant *
        std::pow(3.0 * static_cast<double>(binding.base),
                 static_cast<double>(binding.level));
    out.scenario = binding;

    if (out.network.dims() != predicted)
        throw std::logic_error("compile_mlp: built dims differ from predicted dims");
    if (static_cast<std::int64_t>(out.network.dims().length()) != out.predicted_depth)
        throw std::logic_error("compile_mlp: depth differs from prediction");
    if (static_cast<double>(out.network.dims().max_width()) > out.predicted_width_bound)
        throw std::logic_error("compile_mlp: width exceeds the predicted bound");
    return out;
}

double size_budget_constant(double c, double horizon) {
    return 64.0 * (1.0 + std::sqrt(std::fabs(std::sqrt(c) *
                                             (4.0 * std::sqrt(c) +
                                              2.0 * std::sqrt(c) *
                                                  std::pow(horizon, -1.5)))));
}

double size_budget(double c, double horizon, std::int64_t d, double eps) {
    return size_budget_constant(c, horizon) *
           std::pow(static_cast<double>(d), c) * std::pow(eps, -c) / 4.0;
}

double param_growth_envelope(double c, std::int64_t d, double eps, double delta,
                             double scale) {
    if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("param_growth_envelope: eps, delta in (0,1)");
    const double exponent_d = 3.0 * c + 12.0 * c * c + 2.0 * c * (6.0 + delta);
    const double exponent_eps = -(6.0 * c + 6.0 + delta);
    return scale * std::pow(static_cast<double>(d), exponent_d) *
           std::pow(eps, exponent_eps);
}

EquivalenceReport verify_equivalence(const PideModel& model,
                                     const ScenarioBinding& binding,
                                     const std::vector<Vec>& points, double tolerance,
                                     const CompileOptions& options) {
    const CompiledMlp compiled = compile_mlp(model, binding, options);
    EquivalenceReport report;
    report.tolerance = tolerance;
    for (const Vec& x : points) {
        MlpParams params;
        params.level = binding.level;
        params.base = binding.base;
        params.grid_steps = binding.grid_steps;
        params.t = binding.t;
        params.x = x;
        params.root_theta = binding.root_theta;
        EquivalencePoint p;
        p.x = x;
        p.direct = mlp_estimate(model, params, RngContext(binding.master_seed)).value;
        p.compiled = realize(compiled.network, x)[0];
        p.abs_deviation = std::fabs(p.direct - p.compiled);
        p.rel_deviation = p.abs_deviation / std::max(1.0, std::fabs(p.direct));
        report.max_abs_deviation = std::max(report.max_abs_deviation, p.abs_deviation);
        report.max_rel_deviation = std::max(report.max_rel_deviation, p.rel_deviation);
        report.points.push_back(std::move(p));
    }
    report.pass = report.max_rel_deviation <= tolerance;
    return report;
}

}  // namespace picardnet
