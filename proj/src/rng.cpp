#include "picardnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "picardnet/model.hpp"

namespace picardnet {

namespace {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t absorb(std::uint64_t state, std::uint64_t word) {
    return splitmix64(state ^ word);
}

}  // namespace

const char* purpose_name(StreamPurpose p) {
    switch (p) {
        case StreamPurpose::TimeFraction: return "time_fraction";
        case StreamPurpose::Gaussian: return "gaussian";
        case StreamPurpose::PoissonCount: return "poisson_count";
        case StreamPurpose::JumpMark: return "jump_mark";
    }
    return "unknown";
}

void DrawLog::record(const ThetaIndex& theta, StreamPurpose purpose,
                     std::uint64_t counter, double value) {
    entries[theta.to_string() + "/" + purpose_name(purpose) + "/" +
            std::to_string(counter)] = value;
}

std::uint64_t stream_word(std::uint64_t master_seed, const ThetaIndex& theta,
                          StreamPurpose purpose, std::uint64_t counter) {
    // Two independently keyed lanes; the output mixes both so the whole
    // (seed, theta, purpose, counter) key effectively enters through a
    // 128-bit state.
    std::uint64_t a = absorb(0x8badf00ddeadbeefULL, master_seed);
    std::uint64_t b = absorb(0x0123456789abcdefULL, master_seed);
    a = absorb(a, static_cast<std::uint64_t>(theta.path.size()));
    b = absorb(b, ~static_cast<std::uint64_t>(theta.path.size()));
    for (std::int64_t v : theta.path) {
        const auto w = static_cast<std::uint64_t>(v);
        a = absorb(a, w);
        b = absorb(b, w ^ 0x5555555555555555ULL);
    }
    a = absorb(a, static_cast<std::uint64_t>(purpose));
    b = absorb(b, static_cast<std::uint64_t>(purpose) << 8);
    a = absorb(a, counter);
    b = absorb(b, counter ^ 0xaaaaaaaaaaaaaaaaULL);
    return splitmix64(a ^ (b << 1 | b >> 63));
}

double stream_uniform(const RngContext& ctx, const ThetaIndex& theta,
                      StreamPurpose purpose, std::uint64_t counter) {
    const std::uint64_t w = stream_word(ctx.master_seed, theta, purpose, counter);
    // 53 significand bits, offset by half an ulp: result lies in (0,1).
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

double inverse_normal_cdf(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("inverse_normal_cdf: argument must lie in (0,1)");
    const double q = u - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = (q < 0.0) ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                      0.24178072517745061177) * r + 1.27045825245236838258) * r +
                    3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                      0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                    0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                    0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                      1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                    0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

std::int64_t poisson_from_uniform(double mean, double u) {
    if (mean < 0.0 || !std::isfinite(mean))
        throw std::invalid_argument("poisson_from_uniform: mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    if (mean > 700.0)
        throw std::invalid_argument("poisson_from_uniform: mean too large for CDF inversion");
    double p = std::exp(-mean);
    double cdf = p;
    std::int64_t k = 0;
    // mean + 40*sqrt(mean) + 64 covers every representable uniform.
    const auto cap = static_cast<std::int64_t>(mean + 40.0 * std::sqrt(mean) + 64.0);
    while (u > cdf && k < cap) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

double UniformCursor::next() {
    const double u = stream_uniform(ctx_, *theta_, purpose_, counter_);
    if (ctx_.log) ctx_.log->record(*theta_, purpose_, counter_, u);
    ++counter_;
    return u;
}

double sample_time_fraction(const RngContext& ctx, const ThetaIndex& theta) {
    const double u = stream_uniform(ctx, theta, StreamPurpose::TimeFraction, 0);
    if (ctx.log) ctx.log->record(theta, StreamPurpose::TimeFraction, 0, u);
    return u;
}

double time_from_fraction(double t, double fraction, double horizon) {
    // Rounding may push the sum a final-place digit past the horizon;
    // the result must stay inside [t, horizon].
    return std::min(t + (horizon - t) * fraction, horizon);
}

Vec gaussian_increment(const RngContext& ctx, const ThetaIndex& theta,
                       std::uint64_t segment_index, double dt, int d) {
    if (!(dt > 0.0))
        throw std::invalid_argument("gaussian_increment: dt must be positive");
    const double s = std::sqrt(dt);
    Vec z(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        const std::uint64_t counter = segment_index * static_cast<std::uint64_t>(d) +
                                      static_cast<std::uint64_t>(j);
        const double u = stream_uniform(ctx, theta, StreamPurpose::Gaussian, counter);
        z[static_cast<std::size_t>(j)] = s * inverse_normal_cdf(u);
        if (ctx.log)
            ctx.log->record(theta, StreamPurpose::Gaussian, counter,
                            z[static_cast<std::size_t>(j)]);
    }
    return z;
}

std::vector<Vec> poisson_segment(const RngContext& ctx, const ThetaIndex& theta,
                                 std::uint64_t segment_index, double dt,
                                 const LevySpec& levy) {
    if (!(dt > 0.0))
        throw std::invalid_argument("poisson_segment: dt must be positive");
    if (levy.intensity == 0.0) return {};
    const double u =
        stream_uniform(ctx, theta, StreamPurpose::PoissonCount, segment_index);
    const std::int64_t count = poisson_from_uniform(levy.intensity * dt, u);
    if (ctx.log)
        ctx.log->record(theta, StreamPurpose::PoissonCount, segment_index,
                        static_cast<double>(count));
    // Each segment owns a disjoint counter block for its mark draws.
    UniformCursor cursor(ctx, theta, StreamPurpose::JumpMark, segment_index << 32);
    std::vector<Vec> marks;
    marks.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = 0; j < count; ++j) {
        Vec mark(static_cast<std::size_t>(levy.mark_dim));
        levy.sampler(cursor, mark);
        marks.push_back(std::move(mark));
    }
    return marks;
}

std::optional<ThetaIndex> ThetaIndex::parse(const std::string& text) {
    std::string body = text;
    if (!body.empty() && body.front() == '(' && body.back() == ')')
        body = body.substr(1, body.size() - 2);
    if (body.empty()) return std::nullopt;
    ThetaIndex theta;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const std::size_t comma = body.find(',', pos);
        const std::string tok = body.substr(pos, comma == std::string::npos
                                                     ? std::string::npos
                                                     : comma - pos);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(tok, &used);
            if (used != tok.size()) return std::nullopt;
            theta.path.push_back(v);
        } catch (...) {
            return std::nullopt;
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (theta.path.empty()) return std::nullopt;
    return theta;
}

}  // namespace picardnet
