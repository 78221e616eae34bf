#include "picardnet/mlp.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace picardnet {

namespace {

std::int64_t ipow(std::int64_t base, std::int64_t exp) {
    std::int64_t r = 1;
    for (std::int64_t i = 0; i < exp; ++i) r *= base;
    return r;
}

struct LevelTask {
    std::int64_t level;  // l, or -1 for a terminal trajectory
    std::int64_t index;  // i
};

double estimate_recursive(const PideModel& model, const RngContext& ctx,
                          const ThetaIndex& theta, std::int64_t n, std::int64_t m,
                          std::int64_t grid_steps, double t, const Vec& x,
                          MlpCounters& counters) {
    if (n == 0) return 0.0;
    const double T = model.horizon;

    double terminal_sum = 0.0;
    const std::int64_t m_n = ipow(m, n);
    for (std::int64_t i = 1; i <= m_n; ++i) {
        EmTrajectoryRequest req{theta.child(0, -i), grid_steps, t, T, x};
        terminal_sum += model.g_eval(em_endpoint(model, req, ctx));
        ++counters.paths;
        ++counters.g_evaluations;
    }
    double value = terminal_sum / static_cast<double>(m_n);

    for (std::int64_t level = 0; level < n; ++level) {
        const std::int64_t samples = ipow(m, n - level);
        const double coeff = (T - t) / static_cast<double>(samples);
        double level_sum = 0.0;
        for (std::int64_t i = 1; i <= samples; ++i) {
            const ThetaIndex branch = theta.child(level, i);
            const double fraction = sample_time_fraction(ctx, branch);
            const double tau = time_from_fraction(t, fraction, T);
            EmTrajectoryRequest req{branch, grid_steps, t, tau, x};
            const Vec y = em_endpoint(model, req, ctx);
            ++counters.paths;

            const double inner = estimate_recursive(model, ctx, branch, level, m,
                                                    grid_steps, tau, y, counters);
            double contribution = model.f_eval(inner);
            ++counters.f_evaluations;
            if (level >= 1) {
                const double paired =
                    estimate_recursive(model, ctx, theta.child(-level, i), level - 1,
                                       m, grid_steps, tau, y, counters);
                contribution -= model.f_eval(paired);
                ++counters.f_evaluations;
            }
            level_sum += contribution;
        }
        value += coeff * level_sum;
    }
    return value;
}

}  // namespace

MlpResult mlp_estimate(const PideModel& model, const MlpParams& params,
                       const RngContext& ctx, int workers) {
    if (params.level < 0) throw std::invalid_argument("mlp_estimate: need n >= 0");
    if (params.base < 1) throw std::invalid_argument("mlp_estimate: need m >= 1");
    if (params.grid_steps < 1) throw std::invalid_argument("mlp_estimate: need K >= 1");
    if (params.t < 0.0 || params.t > model.horizon)
        throw std::invalid_argument("mlp_estimate: t outside [0,T]");
    if (static_cast<int>(params.x.size()) != model.dim)
        throw std::invalid_argument("mlp_estimate: point dimension mismatch");

    MlpResult result;
    result.depth_reached = params.level;
    if (params.level == 0) return result;

    const std::int64_t n = params.level;
    const std::int64_t m = params.base;
    const double T = model.horizon;

    if (workers <= 1) {
        result.value = estimate_recursive(model, ctx, params.root_theta, n, m,
                                          params.grid_steps, params.t, params.x,
                                          result.evaluations);
        return result;
    }

    // Top-level terminal and correction sums fan out over independent
    // branches. Each task writes its own slot; the reduction then runs
    // in a fixed order so the result is bitwise independent of the
    // worker count.
    std::vector<LevelTask> tasks;
    for (std::int64_t i = 1; i <= ipow(m, n); ++i) tasks.push_back({-1, i});
    for (std::int64_t level = 0; level < n; ++level)
        for (std::int64_t i = 1; i <= ipow(m, n - level); ++i)
            tasks.push_back({level, i});

    std::vector<double> slot(tasks.size(), 0.0);
    std::vector<MlpCounters> slot_counters(tasks.size());
    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) break;
            const LevelTask& task = tasks[idx];
            MlpCounters& counters = slot_counters[idx];
            if (task.level < 0) {
                EmTrajectoryRequest req{params.root_theta.child(0, -task.index),
                                        params.grid_steps, params.t, T, params.x};
                slot[idx] = model.g_eval(em_endpoint(model, req, ctx));
                ++counters.paths;
                ++counters.g_evaluations;
            } else {
                const ThetaIndex branch = params.root_theta.child(task.level, task.index);
                const double fraction = sample_time_fraction(ctx, branch);
                const double tau = time_from_fraction(params.t, fraction, T);
                EmTrajectoryRequest req{branch, params.grid_steps, params.t, tau,
                                        params.x};
                const Vec y = em_endpoint(model, req, ctx);
                ++counters.paths;
                double v = model.f_eval(estimate_recursive(model, ctx, branch,
                                                           task.level, m,
                                                           params.grid_steps, tau, y,
                                                           counters));
                ++counters.f_evaluations;
                if (task.level >= 1) {
                    v -= model.f_eval(estimate_recursive(
                        model, ctx, params.root_theta.child(-task.level, task.index),
                        task.level - 1, m, params.grid_steps, tau, y, counters));
                    ++counters.f_evaluations;
                }
                slot[idx] = v;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (std::thread& th : pool) th.join();

    std::size_t idx = 0;
    double terminal_sum = 0.0;
    for (std::int64_t i = 1; i <= ipow(m, n); ++i) terminal_sum += slot[idx++];
    double value = terminal_sum / static_cast<double>(ipow(m, n));
    for (std::int64_t level = 0; level < n; ++level) {
        const std::int64_t samples = ipow(m, n - level);
        double level_sum = 0.0;
        for (std::int64_t i = 1; i <= samples; ++i) level_sum += slot[idx++];
        value += (T - params.t) / static_cast<double>(samples) * level_sum;
    }
    result.value = value;
    for (const MlpCounters& c : slot_counters) {
        result.evaluations.paths += c.paths;
        result.evaluations.f_evaluations += c.f_evaluations;
        result.evaluations.g_evaluations += c.g_evaluations;
    }
    return result;
}

double mlp_error_bound(double c, std::int64_t d, double horizon, std::int64_t n,
                       std::int64_t m, const Vec& x) {
    if (c < 2.0 || n < 1 || m < 1)
        throw std::invalid_argument("mlp_error_bound: need c >= 2, n >= 1, m >= 1");
    const double dd = static_cast<double>(d);
    const double md = static_cast<double>(m);
    return 6.0 * std::exp(md / 2.0) * std::pow(md, -static_cast<double>(n) / 2.0) *
           std::exp(12.0 * c * horizon * static_cast<double>(n)) *
           std::sqrt(c * std::pow(dd, c) / horizon) *
           std::sqrt(std::pow(dd, c) + norm2_squared(x));
}

std::int64_t expected_path_count(std::int64_t n, std::int64_t m) {
    if (n == 0) return 0;
    std::int64_t total = ipow(m, n);
    for (std::int64_t level = 0; level < n; ++level) {
        std::int64_t per_branch = 1 + expected_path_count(level, m);
        if (level >= 1) per_branch += expected_path_count(level - 1, m);
        total += ipow(m, n - level) * per_branch;
    }
    return total;
}

std::int64_t default_grid_rule(std::int64_t n) { return std::max<std::int64_t>(1, n * n); }

std::vector<ConvergenceRow> convergence_study(
    const PideModel& model, BenchmarkId benchmark,
    const std::vector<std::int64_t>& levels, std::int64_t reps, double t,
    const Vec& x, const GridRule& grid_rule, std::uint64_t master_seed,
    int workers) {
    const double exact = benchmark_solution(model, benchmark, t, x);
    std::vector<ConvergenceRow> rows;
    for (std::int64_t level : levels) {
        ConvergenceRow row;
        row.level = level;
        row.grid_steps = grid_rule(level);
        row.reps = reps;
        row.exact = exact;
        const auto start = std::chrono::steady_clock::now();

        std::vector<double> values(static_cast<std::size_t>(reps), 0.0);
        std::atomic<std::int64_t> next{0};
        auto run = [&]() {
            while (true) {
                const std::int64_t r = next.fetch_add(1);
                if (r >= reps) break;
                MlpParams params;
                params.level = level;
                params.base = level;
                params.grid_steps = row.grid_steps;
                params.t = t;
                params.x = x;
                params.root_theta = ThetaIndex::root().child(100, r + 1);
                values[static_cast<std::size_t>(r)] =
                    mlp_estimate(model, params, RngContext(master_seed)).value;
            }
        };
        std::vector<std::thread> pool;
        const int nw = std::max(1, workers);
        for (int w = 0; w < nw; ++w) pool.emplace_back(run);
        for (std::thread& th : pool) th.join();

        double sum = 0.0, sq = 0.0;
        for (double v : values) {
            sum += v;
            const double e = v - exact;
            sq += e * e;
        }
        row.mean_value = sum / static_cast<double>(reps);
        row.bias = row.mean_value - exact;
        row.rmse = std::sqrt(sq / static_cast<double>(reps));
        row.error_bound = mlp_error_bound(model.growth_constant, model.dim,
                                          model.horizon, level, level, x);
        row.wall_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace picardnet
