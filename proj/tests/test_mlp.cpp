#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "picardnet/mlp.hpp"

using namespace picardnet;

TEST_CASE("level zero is identically zero with empty counters") {
    const PideModel model = make_const_affine_model(2, 1.0, 2.0, 1.0);
    MlpParams params;
    params.level = 0;
    params.base = 3;
    params.grid_steps = 2;
    params.x = Vec{1.0, 1.0};
    const MlpResult result = mlp_estimate(model, params, RngContext(1));
    CHECK(result.value == 0.0);
    CHECK(result.evaluations.paths == 0);
    CHECK(result.evaluations.f_evaluations == 0);
    CHECK(result.evaluations.g_evaluations == 0);
    CHECK(result.depth_reached == 0);
}

TEST_CASE("constant data collapses to the closed form at level one") {
    // g == 2 and f(0) == 1 make the estimate 2 + (T-t) regardless of the
    // dynamics: the terminal average is constant and the single
    // correction term evaluates f at the zero lower level.
    PideModel model = make_const_affine_model(3, 1.0, 2.0, 1.0);
    model.diffusion = [](const Vec&) {
        Matrix m = Matrix::identity(3);
        m(0, 1) = 0.5;
        return m;
    };
    MlpParams params;
    params.level = 1;
    params.base = 1;
    params.grid_steps = 2;
    params.t = 0.0;
    params.x = Vec{0.3, -0.7, 2.0};
    const MlpResult result = mlp_estimate(model, params, RngContext(99));
    CHECK(result.value == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("at the horizon the estimate is the terminal value") {
    const PideModel model =
        make_linear_exp_model(2, 1.0, Vec{1.0, 1.0}, 0.0, Matrix::identity(2));
    MlpParams params;
    params.level = 1;
    params.base = 1;
    params.grid_steps = 3;
    params.t = 1.0;
    params.x = Vec{1.5, -0.5};
    const MlpResult result = mlp_estimate(model, params, RngContext(4));
    CHECK(result.value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("error bound formula") {
    // 6 e^{1/2} e^{24} sqrt(2) for c=2, d=1, T=1, n=m=1, x=0.
    CHECK(mlp_error_bound(2.0, 1, 1.0, 1, 1, Vec{0.0}) ==
          doctest::Approx(3.705792131510444e11).epsilon(1e-12));
    // Ratio in n at fixed m: m^{-1/2} e^{12 c T}.
    const double r = mlp_error_bound(2.0, 1, 1.0, 2, 3, Vec{0.0}) /
                     mlp_error_bound(2.0, 1, 1.0, 1, 3, Vec{0.0});
    CHECK(r == doctest::Approx(std::exp(24.0) / std::sqrt(3.0)).epsilon(1e-12));
    // Dependence on x through sqrt(d^c + |x|^2).
    const double rx = mlp_error_bound(2.0, 2, 1.0, 1, 1, Vec{3.0, 4.0}) /
                      mlp_error_bound(2.0, 2, 1.0, 1, 1, Vec{0.0, 0.0});
    CHECK(rx == doctest::Approx(std::sqrt((4.0 + 25.0) / 4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(mlp_error_bound(1.0, 1, 1.0, 1, 1, Vec{0.0}), std::invalid_argument);
}

TEST_CASE("path counters match the closed-form recurrence") {
    const PideModel model =
        make_linear_exp_model(1, 1.0, Vec{1.0}, 0.0, Matrix::identity(1));
    for (std::int64_t n = 0; n <= 3; ++n) {
        for (std::int64_t m : {1, 2, 3}) {
            MlpParams params;
            params.level = n;
            params.base = m;
            params.grid_steps = 2;
            params.x = Vec{1.0};
            const MlpResult result = mlp_estimate(model, params, RngContext(7));
            CHECK(result.evaluations.paths == expected_path_count(n, m));
        }
    }
    // Spot value: P(2) with m=2 is m^2 + m^2*(1+0) + m*(1+P(1)) where
    // P(1) = m + m = 4, so 4 + 4 + 2*5 = 18.
    CHECK(expected_path_count(2, 2) == 18);
}

TEST_CASE("with f == 0 the estimate is the plain terminal Monte Carlo mean") {
    PideModel model =
        make_linear_exp_model(2, 1.0, Vec{1.0, 1.0}, 0.0, Matrix::identity(2));
    model.nonlinearity = [](double) { return 0.0; };
    MlpParams params;
    params.level = 2;
    params.base = 3;
    params.grid_steps = 2;
    params.t = 0.25;
    params.x = Vec{1.0, -1.0};
    const RngContext ctx(31);
    const MlpResult result = mlp_estimate(model, params, ctx);

    double oracle = 0.0;
    const std::int64_t paths = 9;  // m^n
    for (std::int64_t i = 1; i <= paths; ++i) {
        EmTrajectoryRequest req{params.root_theta.child(0, -i), params.grid_steps,
                                params.t, model.horizon, params.x};
        oracle += model.terminal(em_endpoint(model, req, ctx));
    }
    oracle /= static_cast<double>(paths);
    CHECK(result.value == doctest::Approx(oracle).epsilon(1e-15));
}

TEST_CASE("estimates are bitwise reproducible at any worker count") {
    const LevySpec levy = constant_marks(0.8, Vec{0.4, -0.2}, 0.8 * 0.2, Vec{0.32, -0.16});
    const PideModel model =
        make_linear_exp_model(2, 1.0, Vec{1.0, 1.0}, 0.0, Matrix::identity(2), &levy);
    MlpParams params;
    params.level = 3;
    params.base = 2;
    params.grid_steps = 3;
    params.t = 0.1;
    params.x = Vec{0.5, 0.5};
    const double v1 = mlp_estimate(model, params, RngContext(77), 1).value;
    const double v2 = mlp_estimate(model, params, RngContext(77), 4).value;
    const double v3 = mlp_estimate(model, params, RngContext(77), 3).value;
    CHECK(v1 == v2);
    CHECK(v1 == v3);
    const auto c1 = mlp_estimate(model, params, RngContext(77), 1).evaluations;
    const auto c4 = mlp_estimate(model, params, RngContext(77), 4).evaluations;
    CHECK(c1.paths == c4.paths);
    CHECK(c1.f_evaluations == c4.f_evaluations);
    CHECK(c1.g_evaluations == c4.g_evaluations);
}

TEST_CASE("convergence study on the constant benchmark is exact") {
    const PideModel model = make_const_affine_model(1, 1.0, 2.0, 1.0);
    const auto rows = convergence_study(model, BenchmarkId::ConstAffine, {1, 2}, 25,
                                        0.0, Vec{0.0}, default_grid_rule, 1234, 2);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.exact == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(row.rmse <= 1e-12);
        CHECK(row.rmse <= row.error_bound * 1.2);
    }
}

TEST_CASE("convergence study improves with the level on the diffusion benchmark") {
    const PideModel model =
        make_linear_exp_model(1, 1.0, Vec{1.0}, 0.0, Matrix::identity(1));
    const auto rows = convergence_study(model, BenchmarkId::LinearExp, {2, 4}, 60, 0.0,
                                        Vec{1.0}, default_grid_rule, 4242, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].grid_steps == 4);
    CHECK(rows[1].grid_steps == 16);
    CHECK(rows[1].rmse < rows[0].rmse);
    for (const auto& row : rows) CHECK(row.rmse <= row.error_bound * 1.2);
    CHECK(rows[0].exact == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
}

TEST_CASE("invalid parameters are rejected") {
    const PideModel model = make_const_affine_model(1, 1.0, 2.0, 1.0);
    MlpParams params;
    params.level = -1;
    params.x = Vec{0.0};
    CHECK_THROWS_AS(mlp_estimate(model, params, RngContext(1)), std::invalid_argument);
    params.level = 1;
    params.base = 0;
    CHECK_THROWS_AS(mlp_estimate(model, params, RngContext(1)), std::invalid_argument);
    params.base = 1;
    params.t = 2.0;
    CHECK_THROWS_AS(mlp_estimate(model, params, RngContext(1)), std::invalid_argument);
}
