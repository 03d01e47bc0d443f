// Run configuration: JSON schema, defaults and content hashing.
#pragma once

#include "outflux/extension.hpp"
#include "outflux/fem.hpp"
#include "outflux/geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace outflux {

struct ForceConfig {
  double center = 0.0;  // on the axis
  double radius = 0.5;
  double a1 = 0.0;
  double a2 = 0.0;
};

struct RunConfig {
  DomainSpec domain;
  BoundaryData data;
  std::optional<double> epsilon;  // nullopt: largest admissible rung of eps_ladder
  std::vector<double> eps_ladder;
  double nu = 1.0;
  int first_level = 1;
  int levels = 3;  // last invading level
  int K = 0;       // ladder rungs; 0 means levels + 2
  GridOptions grid;
  double stop_tol = 1e-4;
  std::optional<ForceConfig> force;
  std::optional<double> strip_delta;
  std::optional<double> collar;
  int trials = 40;
  std::uint64_t seed = 1;
  nlohmann::json source;  // the validated document with defaults filled in

  int ladder_size() const { return K > 0 ? K : levels + 2; }
  std::string hash() const;
};

/// Required: profile {kind, alpha, scale}, R_star, R0, holes, gamma, outlet.
/// Throws ConfigError whose pointer names the offending field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace outflux
