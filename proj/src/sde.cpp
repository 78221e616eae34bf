#include "picardnet/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace picardnet {

double grid_floor(double t, std::int64_t grid_steps, double horizon) {
    if (grid_steps < 1) throw std::invalid_argument("grid_floor: need K >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("grid_floor: need T > 0");
    const double v = t * static_cast<double>(grid_steps) / horizon;
    const auto j = static_cast<std::int64_t>(std::ceil(v)) - 1;
    if (j <= 0) return 0.0;
    return static_cast<double>(j) * horizon / static_cast<double>(grid_steps);
}

std::vector<EmSegment> build_segment_plan(double t, double s, std::int64_t grid_steps,
                                          double horizon) {
    if (!(horizon > 0.0) || grid_steps < 1 || t < 0.0 || s < t || s > horizon * (1.0 + 1e-12))
        throw std::invalid_argument("build_segment_plan: invalid window");
    std::vector<EmSegment> plan;
    for (std::int64_t k = 1; k <= grid_steps; ++k) {
        const double cell_lo = static_cast<double>(k - 1) * horizon /
                               static_cast<double>(grid_steps);
        const double cell_hi = static_cast<double>(k) * horizon /
                               static_cast<double>(grid_steps);
        const double lo = std::max(t, cell_lo);
        const double hi = std::min(s, cell_hi);
        if (hi > lo) plan.push_back({k, lo, hi, lo});
    }
    return plan;
}

std::vector<SegmentDraw> segment_draws(const PideModel& model, const RngContext& ctx,
                                       const ThetaIndex& theta, std::int64_t grid_steps,
                                       double t, double s) {
    const auto plan = build_segment_plan(t, s, grid_steps, model.horizon);
    std::vector<SegmentDraw> draws;
    draws.reserve(plan.size());
    for (const EmSegment& seg : plan) {
        SegmentDraw d;
        d.cell = seg.cell;
        d.length = seg.end - seg.start;
        const auto seg_key = static_cast<std::uint64_t>(seg.cell - 1);
        d.brownian = gaussian_increment(ctx, theta, seg_key, d.length, model.dim);
        d.compensated_jump = scale(-d.length, model.levy.g_mean);
        if (model.levy.intensity > 0.0) {
            const auto marks = poisson_segment(ctx, theta, seg_key, d.length, model.levy);
            for (const Vec& z : marks) {
                const Vec gz = model.jump_map(z);
                for (std::size_t i = 0; i < gz.size(); ++i) d.compensated_jump[i] += gz[i];
            }
        }
        draws.push_back(std::move(d));
    }
    return draws;
}

Vec em_endpoint(const PideModel& model, const EmTrajectoryRequest& request,
                const RngContext& ctx) {
    if (static_cast<int>(request.start_point.size()) != model.dim)
        throw std::invalid_argument("em_endpoint: start point dimension mismatch");
    if (request.start_time < 0.0 || request.end_time < request.start_time ||
        request.end_time > model.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("em_endpoint: invalid time window");
    Vec x = request.start_point;
    const auto draws = segment_draws(model, ctx, request.theta, request.grid_steps,
                                     request.start_time, request.end_time);
    for (const SegmentDraw& d : draws) {
        const Vec beta = model.drift(x);
        const Vec diff = model.diffusion(x).apply(d.brownian);
        const Vec jump = model.jump_scale(x).apply(d.compensated_jump);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += beta[i] * d.length + diff[i] + jump[i];
        for (double v : x)
            if (!std::isfinite(v))
                throw SimulationError("em_endpoint: state overflow at theta " +
                                          request.theta.to_string() + ", cell " +
                                          std::to_string(d.cell),
                                      request.theta, d.cell);
    }
    return x;
}

std::vector<TrajectoryState> em_trajectory_states(const PideModel& model,
                                                  const EmTrajectoryRequest& request,
                                                  const RngContext& ctx) {
    std::vector<TrajectoryState> states;
    states.push_back({request.start_time, request.start_point});
    Vec x = request.start_point;
    const auto draws = segment_draws(model, ctx, request.theta, request.grid_steps,
                                     request.start_time, request.end_time);
    const auto plan = build_segment_plan(request.start_time, request.end_time,
                                         request.grid_steps, model.horizon);
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const SegmentDraw& d = draws[i];
        const Vec beta = model.drift(x);
        const Vec diff = model.diffusion(x).apply(d.brownian);
        const Vec jump = model.jump_scale(x).apply(d.compensated_jump);
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] += beta[j] * d.length + diff[j] + jump[j];
        states.push_back({plan[i].end, x});
    }
    return states;
}

McStat exact_endpoint_martingale_check(const PideModel& model, double t, const Vec& x,
                                       std::int64_t n_samples, std::int64_t grid_steps,
                                       const RngContext& ctx) {
    for (const Vec& probe :
         {x, Vec(static_cast<std::size_t>(model.dim), 0.4)})
        if (norm2_squared(model.drift(probe)) != 0.0)
            throw std::invalid_argument(
                "exact_endpoint_martingale_check: needs driftless dynamics");
    if (n_samples < 1)
        throw std::invalid_argument("exact_endpoint_martingale_check: need n >= 1");

    double sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 1; i <= n_samples; ++i) {
        EmTrajectoryRequest req{ThetaIndex::root().child(0, i), grid_steps, t,
                                model.horizon, x};
        const double g = model.g_eval(em_endpoint(model, req, ctx));
        sum += g;
        sum2 += g * g;
    }
    McStat stat;
    stat.n = n_samples;
    stat.mean = sum / static_cast<double>(n_samples);
    if (n_samples >= 2) {
        const double var = std::max(
            0.0, (sum2 - sum * sum / static_cast<double>(n_samples)) /
                     static_cast<double>(n_samples - 1));
        stat.ci3sigma = 3.0 * std::sqrt(var / static_cast<double>(n_samples));
    } else {
        stat.ci3sigma = std::numeric_limits<double>::quiet_NaN();
    }
    return stat;
}

}  // namespace picardnet
