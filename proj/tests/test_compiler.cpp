#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "picardnet/compiler.hpp"

using namespace picardnet;

namespace {

PideModel networked_linear_exp(int d, const LevySpec* levy = nullptr,
                               double g_offset = 0.0) {
    Vec weights(static_cast<std::size_t>(d), 1.0);
    const Matrix sigma = Matrix::identity(static_cast<std::size_t>(d));
    PideModel model = make_linear_exp_model(d, 1.0, weights, g_offset, sigma, levy);
    AffineVectorCoeff drift{Matrix(static_cast<std::size_t>(d),
                                   static_cast<std::size_t>(d)),
                            Vec(static_cast<std::size_t>(d), 0.0)};
    attach_affine_networks(model, drift, sigma,
                           Matrix::identity(static_cast<std::size_t>(d)), weights,
                           g_offset, 1.0, 0.0);
    return model;
}

PideModel networked_const_affine(int d, double g0, double f0) {
    PideModel model = make_const_affine_model(d, 1.0, g0, f0);
    const auto du = static_cast<std::size_t>(d);
    AffineVectorCoeff drift{Matrix(du, du), Vec(du, 0.0)};
    attach_affine_networks(model, drift, Matrix(du, du), Matrix(du, du),
                           Vec(du, 0.0), g0, 0.0, f0);
    return model;
}

Vec gaussian_test_point(const RngContext& ctx, int d, int index) {
    Vec x(static_cast<std::size_t>(d));
    const ThetaIndex theta = ThetaIndex::root().child(8, 8);
    for (int j = 0; j < d; ++j)
        x[static_cast<std::size_t>(j)] = inverse_normal_cdf(
            stream_uniform(ctx, theta, StreamPurpose::Gaussian,
                           static_cast<std::uint64_t>(index * 64 + j)));
    return x;
}

}  // namespace

TEST_CASE("piecewise-linear interpolation reproduces affine functions exactly") {
    const ReluNetwork net =
        build_pl_f_network([](double w) { return w; }, 1.0, 4.0, 0.5);
    for (double w : {-6.2, -1.0, 0.0, 5.3, 9.7})
        CHECK(std::fabs(realize(net, std::span(&w, 1))[0] - w) <= 1e-12);
}

TEST_CASE("piecewise-linear interpolation is exact on matching breakpoints") {
    const ReluNetwork net =
        build_pl_f_network([](double w) { return std::fabs(w); }, 1.0, 1.0, 1.0);
    for (double w : {-3.0, -1.0, -0.4, 0.0, 0.6, 1.0, 2.5})
        CHECK(std::fabs(realize(net, std::span(&w, 1))[0] - std::fabs(w)) <= 1e-12);
}

TEST_CASE("piecewise-linear interpolation meets the Lipschitz error budget") {
    const double R = 3.141592653589793;
    const double h = R / 16.0;
    const ReluNetwork net =
        build_pl_f_network([](double w) { return std::sin(w); }, 1.0, R, h);
    double worst = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double w = -R + 2.0 * R * i / 10000.0;
        worst = std::max(worst,
                         std::fabs(realize(net, std::span(&w, 1))[0] - std::sin(w)));
    }
    CHECK(worst <= h);
    // The interpolant is 1-Lipschitz like the target.
    double prev = realize(net, std::span<const double>(&R, 1))[0];
    for (int i = 1; i <= 200; ++i) {
        const double w = R + 0.1 * i;
        const double cur = realize(net, std::span(&w, 1))[0];
        CHECK(std::fabs(cur - prev) <= 0.1 + 1e-12);
        prev = cur;
    }
    CHECK_THROWS_AS(build_pl_f_network([](double) { return 1.0; }, 1.0, 0.0, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        build_pl_f_network([](double w) { return 1.0 / w; }, 1.0, 1.0, 0.5),
        std::invalid_argument);
}

TEST_CASE("compiled trajectories match the direct endpoints") {
    const LevySpec levy = constant_marks(1.5, Vec{0.3, -0.1}, 1.5 * 0.1, Vec{0.45, -0.15});
    const PideModel model = networked_linear_exp(2, &levy);
    const RngContext ctx(314);
    const ThetaIndex theta = ThetaIndex::root().child(1, 2);
    const std::int64_t K = 3;
    const double t = 0.2, s = 0.85;
    const ReluNetwork net = compile_em_trajectory(model, theta, K, t, s, ctx);

    // Depth and width bookkeeping; all coefficient nets are depth 3 here.
    CHECK(net.dims().length() == static_cast<std::size_t>(K * 2 + 1));
    const double width_cap = 2.0 * 2 + 3 + 3 + 3;  // 2d + drift + diffusion + jump
    CHECK(static_cast<double>(net.dims().max_width()) <= width_cap);

    for (int p = 0; p < 20; ++p) {
        const Vec x = gaussian_test_point(ctx, 2, p);
        EmTrajectoryRequest req{theta, K, t, s, x};
        const Vec direct = em_endpoint(model, req, ctx);
        const Vec compiled = realize(net, x);
        for (std::size_t i = 0; i < direct.size(); ++i)
            CHECK(std::fabs(compiled[i] - direct[i]) <=
                  1e-8 * (1.0 + std::fabs(direct[i])));
    }
}

TEST_CASE("trajectory nets keep one shape across windows and branches") {
    const PideModel model = networked_linear_exp(2);
    const RngContext ctx(1);
    const auto d1 = compile_em_trajectory(model, ThetaIndex::root().child(0, 1), 4, 0.0,
                                          1.0, ctx)
                        .dims();
    const auto d2 = compile_em_trajectory(model, ThetaIndex::root().child(3, 9), 4, 0.37,
                                          0.62, ctx)
                        .dims();
    CHECK(d1 == d2);
}

TEST_CASE("predicted depth formula") {
    CHECK(predicted_depth(0, 1, 3, 3, 3, 3, 3) == 5);
    CHECK(predicted_depth(1, 2, 3, 3, 3, 3, 3) == 13);
    CHECK(predicted_depth(2, 1, 3, 3, 3, 4, 3) == 15);
    CHECK(predicted_depth(1, 1, 3, 3, 3, 3, 3) == 9);
}

TEST_CASE("level zero compiles to the zero network of the predicted shape") {
    const PideModel model = networked_linear_exp(2);
    ScenarioBinding binding;
    binding.master_seed = 10;
    binding.level = 0;
    binding.base = 2;
    binding.grid_steps = 2;
    const CompiledMlp compiled = compile_mlp(model, binding);
    CHECK(static_cast<std::int64_t>(compiled.network.dims().length()) ==
          compiled.predicted_depth);
    for (int p = 0; p < 5; ++p) {
        const Vec x = gaussian_test_point(RngContext(10), 2, p);
        CHECK(realize(compiled.network, x)[0] == 0.0);
    }
}

TEST_CASE("constant model compiles to the exact closed-form value") {
    const PideModel model = networked_const_affine(2, 2.0, 1.0);
    ScenarioBinding binding;
    binding.master_seed = 5;
    binding.level = 1;
    binding.base = 1;
    binding.grid_steps = 1;
    binding.t = 0.0;
    const EquivalenceReport report = verify_equivalence(
        model, binding, {Vec{0.0, 0.0}, Vec{1.0, -1.0}, Vec{3.0, 2.0}}, 1e-6);
    CHECK(report.pass);
    CHECK(report.max_abs_deviation <= 1e-12);
    for (const auto& p : report.points) {
        CHECK(p.direct == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(p.compiled == doctest::Approx(3.0).epsilon(1e-14));
    }
}

TEST_CASE("compiled estimator equals the direct estimator across a small grid") {
    const LevySpec levy = constant_marks(1.0, Vec{0.2, 0.1}, 0.05, Vec{0.2, 0.1});
    const PideModel model = networked_linear_exp(2, &levy, 0.25);
    for (std::int64_t n : {1, 2}) {
        for (std::int64_t m : {1, 2}) {
            for (std::int64_t K : {1, 2}) {
                ScenarioBinding binding;
                binding.master_seed = 1000 + 100 * n + 10 * m + K;
                binding.level = n;
                binding.base = m;
                binding.grid_steps = K;
                binding.t = 0.3;
                std::vector<Vec> points;
                for (int p = 0; p < 20; ++p)
                    points.push_back(gaussian_test_point(RngContext(2), 2, p));
                const EquivalenceReport report =
                    verify_equivalence(model, binding, points, 1e-6);
                INFO("n=" << n << " m=" << m << " K=" << K
                          << " max_rel=" << report.max_rel_deviation);
                CHECK(report.pass);
            }
        }
    }
}

TEST_CASE("structural formulas hold on the compiled networks") {
    const PideModel model = networked_linear_exp(2);
    const double c_model = width_constant(model);
    for (std::int64_t n : {0, 1, 2}) {
        for (std::int64_t m : {1, 2}) {
            for (std::int64_t K : {1, 3}) {
                ScenarioBinding binding;
                binding.master_seed = 42;
                binding.level = n;
                binding.base = m;
                binding.grid_steps = K;
                binding.t = 0.0;
                const CompiledMlp compiled = compile_mlp(model, binding);
                const DimVector dims = compiled.network.dims();
                CHECK(static_cast<std::int64_t>(dims.length()) ==
                      predicted_depth(n, K, 3, 3, 3, 3, 3));
                CHECK(dims == predicted_mlp_dims(model, n, m, K));
                CHECK(dims.param_count() == compiled.network.stored_scalar_count());
                CHECK(dims.param_count() == compiled.predicted_params);
                CHECK(static_cast<double>(dims.max_width()) <=
                      c_model * std::pow(3.0 * static_cast<double>(m),
                                         static_cast<double>(n)));
            }
        }
    }
}

TEST_CASE("structural sizes match independently computed reference values") {
    // Frozen from a standalone implementation of the dimension algebra.
    struct Expect {
        int d;
        std::int64_t depth, width, params;
    };
    const Expect table[] = {
        {1, 33, 810, 5155504},
        {2, 33, 1098, 8933578},
        {3, 33, 1386, 14053468},
    };
    for (const Expect& e : table) {
        const PideModel model = networked_linear_exp(e.d);
        const DimVector dims = predicted_mlp_dims(model, 3, 3, 3);
        CHECK(static_cast<std::int64_t>(dims.length()) == e.depth);
        CHECK(dims.max_width() == e.width);
        CHECK(dims.param_count() == e.params);
    }
}

TEST_CASE("a genuinely nonlinear f flows through both pipelines identically") {
    // Attach a piecewise-linear interpolant of sin as the shared
    // nonlinearity; the estimator evaluates it through the same network
    // the compiler splices into every correction chain.
    const LevySpec levy = constant_marks(1.0, Vec{0.25}, 0.0625, Vec{0.25});
    PideModel model = networked_linear_exp(1, &levy);
    model.nonlinearity = [](double u) { return std::sin(u); };
    model.nets->nonlinearity_net =
        build_pl_f_network([](double u) { return std::sin(u); }, 1.0, 6.0, 0.25);
    model.exactly_networked = false;  // the interpolant only approximates sin

    ScenarioBinding binding;
    binding.master_seed = 4242;
    binding.level = 2;
    binding.base = 2;
    binding.grid_steps = 2;
    binding.t = 0.0;
    std::vector<Vec> points;
    for (int p = 0; p < 20; ++p) points.push_back(gaussian_test_point(RngContext(6), 1, p));
    const EquivalenceReport report = verify_equivalence(model, binding, points, 1e-6);
    CHECK(report.pass);

    const CompiledMlp compiled = compile_mlp(model, binding);
    // depth_f is still 3, so the depth formula is unchanged.
    CHECK(static_cast<std::int64_t>(compiled.network.dims().length()) ==
          predicted_depth(2, 2, 3, 3, 3, 3, 3));
}

TEST_CASE("compilation regenerates exactly the draws the estimator consumed") {
    const LevySpec levy = constant_marks(2.0, Vec{0.15}, 2.0 * 0.0225, Vec{0.3});
    const PideModel model = networked_linear_exp(1, &levy);

    ScenarioBinding binding;
    binding.master_seed = 777;
    binding.level = 2;
    binding.base = 2;
    binding.grid_steps = 2;
    binding.t = 0.1;

    DrawLog direct_log;
    MlpParams params;
    params.level = binding.level;
    params.base = binding.base;
    params.grid_steps = binding.grid_steps;
    params.t = binding.t;
    params.x = Vec{1.0};
    params.root_theta = binding.root_theta;
    mlp_estimate(model, params, RngContext(binding.master_seed, &direct_log));

    DrawLog compile_log;
    CompileOptions options;
    options.draw_log = &compile_log;
    compile_mlp(model, binding, options);

    CHECK(direct_log.entries == compile_log.entries);
    CHECK(!direct_log.entries.empty());
}

TEST_CASE("mixed-depth coefficient nets are harmonized before stepping") {
    // Deepen the diffusion factory to depth 5; the drift and jump nets
    // stay at depth 3 and must be lifted to match. The step depth and
    // every realization must be unchanged by the lifting.
    PideModel model = networked_linear_exp(2);
    const auto base_factory = model.nets->diffusion_dir_net;
    model.nets->diffusion_dir_net = [base_factory](const Vec& v) {
        return extend_depth(base_factory(v), 2);
    };
    const RngContext ctx(2718);
    const ThetaIndex theta = ThetaIndex::root().child(2, 2);
    const std::int64_t K = 2;
    const ReluNetwork traj = compile_em_trajectory(model, theta, K, 0.0, 1.0, ctx);
    CHECK(traj.dims().length() == static_cast<std::size_t>(K * (5 - 1) + 1));
    for (int p = 0; p < 10; ++p) {
        const Vec x = gaussian_test_point(ctx, 2, p);
        EmTrajectoryRequest req{theta, K, 0.0, 1.0, x};
        const Vec direct = em_endpoint(model, req, ctx);
        const Vec compiled = realize(traj, x);
        for (std::size_t i = 0; i < direct.size(); ++i)
            CHECK(std::fabs(compiled[i] - direct[i]) <=
                  1e-8 * (1.0 + std::fabs(direct[i])));
    }

    // Whole-pipeline equivalence and bookkeeping under harmonization.
    ScenarioBinding binding;
    binding.master_seed = 919;
    binding.level = 2;
    binding.base = 2;
    binding.grid_steps = 2;
    binding.t = 0.1;
    std::vector<Vec> points;
    for (int p = 0; p < 10; ++p) points.push_back(gaussian_test_point(RngContext(3), 2, p));
    const EquivalenceReport report = verify_equivalence(model, binding, points, 1e-6);
    CHECK(report.pass);
    const CompiledMlp compiled = compile_mlp(model, binding);
    CHECK(static_cast<std::int64_t>(compiled.network.dims().length()) ==
          predicted_depth(2, 2, 3, 5, 3, 3, 3));
    CHECK(compiled.network.dims() == predicted_mlp_dims(model, 2, 2, 2));
    CHECK(static_cast<double>(compiled.network.dims().max_width()) <=
          compiled.predicted_width_bound);
}

TEST_CASE("resource ceiling refuses oversized compilations with the predicted size") {
    const PideModel model = networked_linear_exp(2);
    ScenarioBinding binding;
    binding.master_seed = 3;
    binding.level = 3;
    binding.base = 3;
    binding.grid_steps = 3;
    CompileOptions options;
    options.param_ceiling = 1000;
    try {
        compile_mlp(model, binding, options);
        FAIL("expected a resource limit error");
    } catch (const ResourceLimitError& e) {
        CHECK(e.predicted_params ==
              predicted_mlp_dims(model, 3, 3, 3).param_count());
        CHECK(e.ceiling == 1000);
    }
}

TEST_CASE("growth envelope ratios") {
    const double c = 2.0, delta = 0.5;
    const double base = param_growth_envelope(c, 2, 0.5, delta, 1.0);
    const double doubled = param_growth_envelope(c, 4, 0.5, delta, 1.0);
    CHECK(doubled / base ==
          doctest::Approx(std::pow(2.0, 3 * c + 12 * c * c + 2 * c * (6 + delta)))
              .epsilon(1e-10));
    const double half_eps = param_growth_envelope(c, 2, 0.25, delta, 1.0);
    CHECK(half_eps / base ==
          doctest::Approx(std::pow(2.0, 6 * c + 6 + delta)).epsilon(1e-10));
    for (double d : {0.1, 0.5, 0.9})
        CHECK(std::isfinite(param_growth_envelope(c, 8, 0.3, d, 1.0)));
    CHECK_THROWS_AS(param_growth_envelope(c, 2, 1.5, delta, 1.0), std::invalid_argument);
}

TEST_CASE("size budget constant") {
    // b = 64 (1 + sqrt(sqrt(c) (4 sqrt(c) + 2 sqrt(c) T^{-3/2}))) at c=2, T=1
    // is 64 (1 + sqrt(12)).
    CHECK(size_budget_constant(2.0, 1.0) ==
          doctest::Approx(64.0 * (1.0 + std::sqrt(12.0))).epsilon(1e-12));
    CHECK(size_budget(2.0, 1.0, 2, 0.5) ==
          doctest::Approx(64.0 * (1.0 + std::sqrt(12.0)) * 4.0 * 4.0 / 4.0)
              .epsilon(1e-12));
}

TEST_CASE("serialized compiled networks round trip") {
    const PideModel model = networked_linear_exp(1);
    ScenarioBinding binding;
    binding.master_seed = 12;
    binding.level = 1;
    binding.base = 2;
    binding.grid_steps = 2;
    const CompiledMlp compiled = compile_mlp(model, binding);
    std::stringstream buf;
    save_network(buf, compiled.network);
    const ReluNetwork back = load_network(buf);
    CHECK(back.dims() == compiled.network.dims());
    const Vec x{0.8};
    CHECK(realize(back, x)[0] == realize(compiled.network, x)[0]);
}
