#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "picardnet/mlp.hpp"
#include "picardnet/model.hpp"
#include "picardnet/relunet.hpp"

namespace picardnet {

/// The tuple that freezes one scenario: every random time and every
/// Gaussian or Poisson draw the estimator consumes is regenerated
/// identically from these fields, so the direct estimator and the
/// compiled network see the same randomness.
struct ScenarioBinding {
    std::uint64_t master_seed = 0;
    ThetaIndex root_theta = ThetaIndex::root();
    double t = 0.0;
    std::int64_t level = 0;       // n
    std::int64_t base = 1;        // m
    std::int64_t grid_steps = 1;  // K
};

struct CompiledMlp {
    ReluNetwork network;
    std::int64_t predicted_depth = 0;
    double predicted_width_bound = 0.0;
    double width_constant = 0.0;  // the per-model constant in the width law
    std::int64_t predicted_params = 0;
    ScenarioBinding scenario;
};

struct ResourceLimitError : std::runtime_error {
    ResourceLimitError(std::int64_t predicted, std::int64_t ceiling)
        : std::runtime_error("compile_mlp: predicted parameter count " +
                             std::to_string(predicted) + " exceeds ceiling " +
                             std::to_string(ceiling)),
          predicted_params(predicted),
          ceiling(ceiling) {}
    std::int64_t predicted_params;
    std::int64_t ceiling;
};

/// Single-hidden-layer network interpolating f on the grid
/// -R, -R+h, ..., with the end slopes extended linearly. For an
/// L-Lipschitz f the sup error on [-R,R] is at most L*h and the network
/// is again L-Lipschitz. Piecewise-linear f with breakpoints on the
/// grid is reproduced exactly.
ReluNetwork build_pl_f_network(const std::function<double(double)>& f,
                               double lipschitz_bound, double radius, double grid_h);

/// Network realizing x -> endpoint of the Euler-Maruyama trajectory for
/// one frozen scenario. One step block per grid cell (inactive cells
/// degenerate to exact identities), chained by composition. The
/// layer-size vector depends only on (K, coefficient-net shapes).
ReluNetwork compile_em_trajectory(const PideModel& model, const ThetaIndex& theta,
                                  std::int64_t grid_steps, double t, double s,
                                  const RngContext& ctx);

/// Depth of the compiled estimator network:
///   (n+1) [K (max coeff-net depth - 1) + 1] + n (depth_f - 2) + depth_g - 1,
/// where the max runs over the drift, diffusion and jump-scale nets
/// (harmonized to a common depth before compilation).
std::int64_t predicted_depth(std::int64_t n, std::int64_t grid_steps,
                             std::int64_t depth_beta, std::int64_t depth_sigma,
                             std::int64_t depth_jump, std::int64_t depth_f,
                             std::int64_t depth_g);

/// The model constant of the width law: 2d plus the sup-norms of the
/// five coefficient layer-size vectors. The compiled network width is
/// bounded by width_constant * (3m)^n.
double width_constant(const PideModel& model);

/// Exact layer-size vector of the compiled estimator, computed from the
/// dimension algebra alone (no weights); building the network yields
/// the same vector entry by entry.
DimVector predicted_mlp_dims(const PideModel& model, std::int64_t n, std::int64_t m,
                             std::int64_t grid_steps);

struct CompileOptions {
    std::int64_t param_ceiling = 50'000'000;
    /// When set, every draw regenerated during compilation is recorded;
    /// comparing against the estimator's log checks scenario fidelity.
    DrawLog* draw_log = nullptr;
};

/// Compiles the level-(n,m) estimator for one frozen scenario into a
/// single network with input R^d and output R. Refuses (with the
/// predicted size) when the predicted parameter count exceeds the
/// ceiling.
CompiledMlp compile_mlp(const PideModel& model, const ScenarioBinding& binding,
                        const CompileOptions& options = {});

/// b constant of the size-budget hypotheses.
double size_budget_constant(double c, double horizon);
/// Per-coefficient-net size budget b d^c eps^{-c} / 4.
double size_budget(double c, double horizon, std::int64_t d, double eps);

/// Headline parameter-count envelope
///   scale * d^{3c + 12c^2 + 2c(6+delta)} * eps^{-6c - 6 - delta};
/// used only for scaling plots (the true constant is not reproducible).
double param_growth_envelope(double c, std::int64_t d, double eps, double delta,
                             double scale);

struct EquivalencePoint {
    Vec x;
    double direct = 0.0;
    double compiled = 0.0;
    double abs_deviation = 0.0;
    double rel_deviation = 0.0;
};

struct EquivalenceReport {
    std::vector<EquivalencePoint> points;
    double max_abs_deviation = 0.0;
    double max_rel_deviation = 0.0;
    double tolerance = 1e-6;
    bool pass = false;
};

/// Evaluates the direct estimator and the compiled network at each
/// point and reports deviations; passes iff the max relative deviation
/// is within tolerance.
EquivalenceReport verify_equivalence(const PideModel& model,
                                     const ScenarioBinding& binding,
                                     const std::vector<Vec>& points,
                                     double tolerance = 1e-6,
                                     const CompileOptions& options = {});

}  // namespace picardnet
