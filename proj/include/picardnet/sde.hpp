#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "picardnet/model.hpp"

namespace picardnet {

/// Largest grid point of {0, T/K, ..., T} strictly below t, or 0 when
/// none exists (so the floor of 0 is 0 itself).
double grid_floor(double t, std::int64_t grid_steps, double horizon);

struct EmTrajectoryRequest {
    ThetaIndex theta;
    std::int64_t grid_steps = 1;  // K
    double start_time = 0.0;      // t
    double end_time = 0.0;        // s, with t <= s <= T
    Vec start_point;
};

/// One active piece of the trajectory window inside a single grid cell.
/// Coefficients are frozen at the anchor, which is the segment start
/// (grid points act as right-open segment boundaries).
struct EmSegment {
    std::int64_t cell = 0;  // 1-based grid cell index; keys the draws
    double start = 0.0;
    double end = 0.0;
    double anchor_time = 0.0;
};

/// The contiguous non-overlapping segments covering [t, s]; zero-length
/// cells are omitted (they contribute nothing to the endpoint).
std::vector<EmSegment> build_segment_plan(double t, double s, std::int64_t grid_steps,
                                          double horizon);

/// Regenerated randomness of one segment: the Brownian increment and
/// the compensated compound-Poisson contribution
/// sum_j G(z_j) - length * g_mean.
struct SegmentDraw {
    std::int64_t cell = 0;
    double length = 0.0;
    Vec brownian;
    Vec compensated_jump;
};

/// The full list of draws a trajectory consumes, keyed purely by
/// (seed, theta, cell). Shared verbatim by the direct simulator and the
/// network compiler, which is what makes the two pipelines replay the
/// same scenario.
std::vector<SegmentDraw> segment_draws(const PideModel& model, const RngContext& ctx,
                                       const ThetaIndex& theta, std::int64_t grid_steps,
                                       double t, double s);

struct SimulationError : std::runtime_error {
    SimulationError(const std::string& what, ThetaIndex theta, std::int64_t cell)
        : std::runtime_error(what), theta(std::move(theta)), cell(cell) {}
    ThetaIndex theta;
    std::int64_t cell;
};

/// Endpoint of the Euler-Maruyama trajectory: per active cell,
///   x <- x + beta(x) dt + sigma(x) dW + F(x) J,
/// with all increments of a cell acting on the state at the cell anchor.
Vec em_endpoint(const PideModel& model, const EmTrajectoryRequest& request,
                const RngContext& ctx);

struct TrajectoryState {
    double time = 0.0;
    Vec state;
};

/// The anchor states of the same trajectory, one row per segment
/// boundary including start and endpoint. Consumes exactly the draws of
/// em_endpoint; debugging aid behind the CLI dump flag.
std::vector<TrajectoryState> em_trajectory_states(const PideModel& model,
                                                  const EmTrajectoryRequest& request,
                                                  const RngContext& ctx);

struct McStat {
    double mean = 0.0;
    double ci3sigma = 0.0;  // NaN when fewer than two samples
    std::int64_t n = 0;
};

/// Weak-error oracle: for driftless dynamics with affine terminal
/// condition the endpoint mean is exactly g(x) at every grid
/// resolution, jumps included (the compensator makes them a
/// martingale). Returns the Monte Carlo mean with its 3-sigma interval.
McStat exact_endpoint_martingale_check(const PideModel& model, double t, const Vec& x,
                                       std::int64_t n_samples, std::int64_t grid_steps,
                                       const RngContext& ctx);

}  // namespace picardnet
