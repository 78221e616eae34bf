#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "picardnet/linalg.hpp"
#include "picardnet/theta.hpp"

namespace picardnet {

struct LevySpec;

/// Stream roles. A draw is a pure function of
/// (master_seed, theta, purpose, counter), so any consumer can replay
/// any draw in any order.
enum class StreamPurpose : std::uint64_t {
    TimeFraction = 1,
    Gaussian = 2,
    PoissonCount = 3,
    JumpMark = 4,
};

const char* purpose_name(StreamPurpose p);

/// Optional recorder used by the scenario-fidelity checks: maps
/// "(theta)/purpose/counter" to the drawn value. Two pipelines consumed
/// the same randomness iff their logs are equal as maps.
struct DrawLog {
    std::map<std::string, double> entries;

    void record(const ThetaIndex& theta, StreamPurpose purpose,
                std::uint64_t counter, double value);
    bool operator==(const DrawLog&) const = default;
};

struct RngContext {
    std::uint64_t master_seed = 0;
    DrawLog* log = nullptr;

    RngContext(std::uint64_t seed) : master_seed(seed) {}  // NOLINT(google-explicit-constructor)
    RngContext(std::uint64_t seed, DrawLog* l) : master_seed(seed), log(l) {}
};

/// Raw 64-bit word for a stream key; basis of every draw below.
std::uint64_t stream_word(std::uint64_t master_seed, const ThetaIndex& theta,
                          StreamPurpose purpose, std::uint64_t counter);

/// Uniform in (0,1), never exactly 0 or 1.
double stream_uniform(const RngContext& ctx, const ThetaIndex& theta,
                      StreamPurpose purpose, std::uint64_t counter);

/// Quantile function of the standard normal distribution (Wichura's
/// AS 241, double precision). Fixed here once and for all so that the
/// direct estimator and the compiled networks regenerate identical
/// Gaussian draws.
double inverse_normal_cdf(double u);

/// Poisson sample by CDF inversion of a single uniform. Supports means
/// up to ~700 (finite-activity desk scale); larger means throw.
std::int64_t poisson_from_uniform(double mean, double u);

/// Sequential uniforms from one (theta, purpose) stream, starting at a
/// given counter. Used by mark samplers that need a variable number of
/// uniforms per jump.
class UniformCursor {
public:
    UniformCursor(const RngContext& ctx, const ThetaIndex& theta,
                  StreamPurpose purpose, std::uint64_t start_counter)
        : ctx_(ctx), theta_(&theta), purpose_(purpose), counter_(start_counter) {}

    double next();
    std::uint64_t counter() const { return counter_; }

private:
    RngContext ctx_;
    const ThetaIndex* theta_;
    StreamPurpose purpose_;
    std::uint64_t counter_;
};

/// The uniform fraction owned by theta; deterministic in (seed, theta).
double sample_time_fraction(const RngContext& ctx, const ThetaIndex& theta);

/// Maps a fraction in [0,1] to the time t + (T-t)*fraction.
double time_from_fraction(double t, double fraction, double horizon);

/// d independent N(0, dt) coordinates for one grid segment of the
/// trajectory owned by theta. Coordinate j consumes counter
/// segment_index*d + j, so consumption is independent of evaluation
/// order across segments.
Vec gaussian_increment(const RngContext& ctx, const ThetaIndex& theta,
                       std::uint64_t segment_index, double dt, int d);

/// Compound-Poisson marks for one grid segment: a Poisson(intensity*dt)
/// count followed by that many raw marks from the configured sampler.
/// Deterministic replay; an intensity of zero always yields no marks.
std::vector<Vec> poisson_segment(const RngContext& ctx, const ThetaIndex& theta,
                                 std::uint64_t segment_index, double dt,
                                 const LevySpec& levy);

}  // namespace picardnet
