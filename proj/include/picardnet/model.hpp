#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "picardnet/linalg.hpp"
#include "picardnet/relunet.hpp"
#include "picardnet/rng.hpp"

namespace picardnet {

/// Finite-activity jump specification: a compound Poisson process with
/// total rate `intensity` and marks drawn by `sampler`. The compensator
/// vector `g_mean` (the intensity-weighted mean of the mapped marks) is
/// an analytic input, never estimated, so the compensated Euler step
/// carries no nested Monte Carlo bias.
struct LevySpec {
    using MarkSampler = std::function<void(UniformCursor&, Vec& out)>;

    double intensity = 0.0;
    int mark_dim = 0;
    MarkSampler sampler;
    Vec g_mean;
    double g_second_moment_bound = 0.0;

    void validate() const;
};

LevySpec no_jumps(int d);
/// Marks with independent N(mean_j, stddev^2) coordinates.
LevySpec gaussian_marks(double intensity, const Vec& mean, double stddev,
                        double g_second_moment_bound, const Vec& g_mean);
/// Every jump carries the same deterministic mark.
LevySpec constant_marks(double intensity, const Vec& mark,
                        double g_second_moment_bound, const Vec& g_mean);

/// Networks realizing the model coefficients. The directional factories
/// produce, for a direction v, a network realizing x -> sigma(x) v
/// (resp. x -> F(x) v) whose layer-size vector does not depend on v.
struct NetworkCoefficientSet {
    ReluNetwork drift_net;
    std::function<ReluNetwork(const Vec&)> diffusion_dir_net;
    std::function<ReluNetwork(const Vec&)> jump_dir_net;
    ReluNetwork terminal_net;
    ReluNetwork nonlinearity_net;
};

/// A semilinear parabolic problem with jump-diffusion dynamics:
/// terminal condition g, nonlinearity f acting on the solution value,
/// drift beta, diffusion sigma, and a factored jump coefficient
/// gamma(y,z) = F(y) G(z) against a compound Poisson measure.
/// Immutable after construction; safe for concurrent read-only use.
struct PideModel {
    int dim = 1;
    double horizon = 1.0;
    double growth_constant = 2.0;  // the constant c >= 2 of the standing assumptions

    std::function<Vec(const Vec&)> drift;           // beta : R^d -> R^d
    std::function<Matrix(const Vec&)> diffusion;    // sigma: R^d -> R^{dxd}
    std::function<Matrix(const Vec&)> jump_scale;   // F    : R^d -> R^{dxd}
    std::function<Vec(const Vec&)> jump_map;        // G    : R^d -> R^d
    LevySpec levy;
    std::function<double(double)> nonlinearity;     // f
    std::function<double(const Vec&)> terminal;     // g

    std::optional<NetworkCoefficientSet> nets;
    bool exactly_networked = false;

    Vec gamma(const Vec& y, const Vec& z) const {
        return jump_scale(y).apply(jump_map(z));
    }

    /// f through the shared network when one is attached, so the direct
    /// estimator and the compiled networks evaluate the same function.
    double f_eval(double w) const {
        if (nets) {
            const Vec out = realize(nets->nonlinearity_net, std::span(&w, 1));
            return out[0];
        }
        return nonlinearity(w);
    }

    double g_eval(const Vec& x) const {
        if (nets) return realize(nets->terminal_net, x)[0];
        return terminal(x);
    }

    void validate() const;
};

struct AssumptionCheck {
    std::string name;
    double worst_ratio = 0.0;
    bool pass = true;
};

/// Sampling-based report on the standing coefficient assumptions.
/// Advisory: a failing ratio is evidence of a violation, a passing one
/// is not a proof. Conditions with no algorithmic role (the Jacobian
/// determinant lower bound and the per-mark jump domination) are listed
/// under `not_checked`.
struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    std::vector<std::string> not_checked;
    bool pass = true;
    std::string violated;  // first failing check, empty if none
};

AssumptionReport validate_assumptions(const PideModel& model, int sample_count,
                                      const RngContext& ctx);

enum class BenchmarkId { ConstAffine, LinearExp };

const char* benchmark_name(BenchmarkId id);
std::optional<BenchmarkId> parse_benchmark(const std::string& name);

/// Closed-form solution of the benchmark problems.
///   ConstAffine: g == g0 and f == f0 constant, any dynamics;
///                u(t,x) = g0 + f0 (T - t).
///   LinearExp:   g affine, f(u) = u, driftless dynamics with
///                compensated jumps; u(t,x) = g(x) e^{T-t}.
/// Throws std::invalid_argument when the model does not match the id.
double benchmark_solution(const PideModel& model, BenchmarkId id, double t,
                          const Vec& x);

// ---------------------------------------------------------------------------
// Ready-made models used by the benchmark catalog and the test suites.

struct AffineVectorCoeff {  // x -> M x + b
    Matrix matrix;
    Vec offset;
};

/// g == g0, f == f0, with optional affine drift, constant diffusion and
/// constant-scale compensated jumps.
PideModel make_const_affine_model(int d, double horizon, double g0, double f0,
                                  const std::optional<AffineVectorCoeff>& drift = {},
                                  const std::optional<Matrix>& diffusion = {},
                                  const std::optional<Matrix>& jump_scale = {},
                                  const LevySpec* levy = nullptr);

/// g(x) = weights . x + offset, f(u) = u, driftless, constant diffusion,
/// optional compensated jumps with G = identity.
PideModel make_linear_exp_model(int d, double horizon, const Vec& g_weights,
                                double g_offset, const Matrix& diffusion,
                                const LevySpec* levy = nullptr);

/// Builds exact networks for a model whose coefficients are affine
/// (drift), constant (diffusion and jump scale) and affine (g, f), and
/// attaches them. The realizations agree with the callables exactly.
void attach_affine_networks(PideModel& model, const AffineVectorCoeff& drift,
                            const Matrix& diffusion, const Matrix& jump_scale,
                            const Vec& g_weights, double g_offset, double f_slope,
                            double f_intercept);

}  // namespace picardnet
