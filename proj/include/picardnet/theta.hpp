#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace picardnet {

/// Address of one independent bundle of randomness (evaluation-time
/// fraction, Brownian path, Poisson measure) in the estimator tree.
/// The root is the one-element sequence (0); children extend the path
/// by exactly two integers, so the families (0,-i), (l,i) and (-l,i)
/// with l >= 0, i >= 1 never collide.
struct ThetaIndex {
    std::vector<std::int64_t> path;

    static ThetaIndex root() { return ThetaIndex{{0}}; }

    ThetaIndex child(std::int64_t a, std::int64_t b) const {
        ThetaIndex c{path};
        c.path.push_back(a);
        c.path.push_back(b);
        return c;
    }

    bool operator==(const ThetaIndex& other) const = default;

    std::string to_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(path[i]);
        }
        s += ")";
        return s;
    }

    /// Parses "(a,b,...)" or "a,b,...". Returns nullopt on malformed input.
    static std::optional<ThetaIndex> parse(const std::string& text);
};

}  // namespace picardnet
