#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "picardnet/model.hpp"
#include "picardnet/sde.hpp"

namespace picardnet {

struct MlpParams {
    std::int64_t level = 0;       // n
    std::int64_t base = 1;        // m
    std::int64_t grid_steps = 1;  // K
    double t = 0.0;
    Vec x;
    ThetaIndex root_theta = ThetaIndex::root();
};

struct MlpCounters {
    std::int64_t paths = 0;
    std::int64_t f_evaluations = 0;
    std::int64_t g_evaluations = 0;
};

struct MlpResult {
    double value = 0.0;
    MlpCounters evaluations;
    std::int64_t depth_reached = 0;
};

/// Full-history recursive multilevel Picard estimator over
/// Euler-Maruyama endpoints. Level 0 is identically zero. At level n
/// the terminal condition is averaged over m^n fresh trajectories, and
/// each Picard correction level l < n re-evaluates the nonlinearity on
/// a pair of lower-level estimates taken at one random time and one
/// trajectory endpoint shared by the pair. All randomness is keyed by
/// extensions of the root index, so the result is a pure function of
/// (model, params, seed) independent of scheduling and worker count.
MlpResult mlp_estimate(const PideModel& model, const MlpParams& params,
                       const RngContext& ctx, int workers = 1);

/// A priori root-mean-square error bound of the level-(n,m) estimator:
///   6 e^{m/2} m^{-n/2} e^{12 c T n} (c d^c / T)^{1/2} (d^c + |x|^2)^{1/2}.
double mlp_error_bound(double c, std::int64_t d, double horizon, std::int64_t n,
                       std::int64_t m, const Vec& x);

/// Closed-form trajectory count implied by the recursion; used to audit
/// the simulation counters.
std::int64_t expected_path_count(std::int64_t n, std::int64_t m);

struct ConvergenceRow {
    std::int64_t level = 0;       // n = m
    std::int64_t grid_steps = 0;  // K
    std::int64_t reps = 0;
    double exact = 0.0;
    double mean_value = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double error_bound = 0.0;
    double wall_seconds = 0.0;
};

using GridRule = std::function<std::int64_t(std::int64_t)>;

/// Default grid rule K = n^2, tying the discretization error decay to
/// the Picard level.
std::int64_t default_grid_rule(std::int64_t n);

/// Runs `reps` independent estimates per level against the closed-form
/// benchmark value and reports bias, RMSE and the a priori bound.
/// Rep r of every level uses root index (root, 100, r) under the same
/// master seed, so levels are seed-paired.
std::vector<ConvergenceRow> convergence_study(
    const PideModel& model, BenchmarkId benchmark,
    const std::vector<std::int64_t>& levels, std::int64_t reps, double t,
    const Vec& x, const GridRule& grid_rule, std::uint64_t master_seed,
    int workers = 1);

}  // namespace picardnet
