#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bubblenet/bubble.hpp"
#include "bubblenet/params.hpp"
#include "bubblenet/risk.hpp"

#include "json.hpp"

namespace bubblenet {

struct GridSettings {
  std::vector<double> lambda_values{0.5, 1.0, 2.0};
  std::vector<double> delta_values{0.0, 0.025, 0.05, 0.075, 0.1, 0.2, 0.3};
  std::vector<ScenarioKind> scenarios{ScenarioKind::bubble_finite,
                                      ScenarioKind::counterfactual_finite,
                                      ScenarioKind::static_finite};
};

struct ConvergenceSettings {
  std::vector<int> n_values{6, 12, 25, 50, 100};
  std::size_t paths = 2000;
  double horizon = 1.0;
};

struct OutputSettings {
  std::size_t stride = 10;
};

/// Complete, validated run configuration.
struct Config {
  NetworkParams network;
  BubbleParams bubble;
  RiskSettings risk;
  PhiSettings phi;
  GridSettings grid;
  ConvergenceSettings convergence;
  OutputSettings output;
  std::uint64_t seed = 20240601;
};

/// Shipped defaults. The bubble block is not taken from any published
/// calibration; it was fixed once so that the qualitative risk orderings hold.
Config default_config();

/// Overlays a JSON document (nested objects or dotted keys) on the defaults.
/// Unknown keys are rejected, and so are malformed values.
Config config_from_json(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);

/// Throws ConfigError if any section is inconsistent.
void validate_config(const Config& c);

nlohmann::json to_json(const Config& c);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_fingerprint(const Config& c);

/// All accepted dotted keys.
const std::vector<std::string>& known_config_keys();

}  // namespace bubblenet
