#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "picardnet/model.hpp"

namespace picardnet {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Builds a model from its structured description. Coefficient kinds:
///   drift:      zero | constant {value} | linear {matrix} | affine {matrix, offset}
///   diffusion,
///   jump_scale: zero | identity | scaled_identity {scale} | constant {matrix}
///   g:          constant {value} | linear {weights} | affine {weights, offset}
///   f:          zero | constant {value} | linear {slope} | affine {slope, intercept}
///   jumps:      { intensity, marks: gaussian {mean, stddev} | constant {value} }
/// The jump mark map G is the identity; the compensator and the
/// second-moment bound are derived analytically (explicit overrides via
/// "g_mean" / "g_second_moment_bound" are honored).
/// With "networked": true, exact coefficient networks are attached.
PideModel model_from_json(const nlohmann::json& spec);

struct LoadedConfig {
    nlohmann::json raw;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool deterministic = false;
    std::string out_dir = ".";
    std::optional<PideModel> model;
    std::optional<BenchmarkId> benchmark;
};

LoadedConfig load_config_file(const std::string& path);
LoadedConfig load_config_json(const nlohmann::json& root);

}  // namespace picardnet
