#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bubblenet/config.hpp"
#include "bubblenet/risk.hpp"

namespace bubblenet {

/// Risk table over the (lambda, delta) grid for every configured scenario.
/// Static scenarios are evaluated once per lambda since the delay only acts
/// through the fitness weights. All cells share one set of driver streams
/// (common random numbers).
struct RiskTable {
  std::vector<double> lambda_values;
  std::vector<double> delta_values;
  std::vector<RiskReport> reports;  // row-major: scenario, lambda, delta

  /// Report for a cell, or nullptr when absent.
  const RiskReport* find(ScenarioKind s, double lambda, double delta) const;
};

RiskTable risk_table(const Config& c, unsigned workers);

struct ConvergenceRow {
  int n = 0;
  std::size_t paths = 0;
  double periphery_distance = 0.0;  // E sup_s |rho^{1,n}_s - rho_bar^1_s|
  double core_distance = 0.0;       // E sup_s |rho^{1,B}_s - rho_bar^{1,B}_s|
  double periphery_se = 0.0;
  double core_se = 0.0;

  double total() const { return periphery_distance + core_distance; }
};

/// Pairs finite networks of each configured size with the limit system on
/// common drivers and estimates the expected running-sup distance up to the
/// convergence horizon. All sizes share the same per-path driver streams.
std::vector<ConvergenceRow> convergence_study(const Config& c, unsigned workers);

/// Per-path outputs of `simulate-finite` / `simulate-meanfield`.
struct PathSummary {
  std::uint32_t path = 0;
  bool burst = false;
  double tau = 0.0;
  double beta_tau = 0.0;
  double rho_tau = 0.0;
  double rho_tau_Delta = 0.0;
  bool window_inside = false;
};

struct SimulationOutput {
  std::vector<PathSummary> summaries;
  std::vector<std::string> trajectory_header;
  std::vector<double> trajectory;  // first path, row-major
};

SimulationOutput simulate_finite_paths(const Config& c, Scenario scenario, std::size_t paths,
                                       unsigned workers);
SimulationOutput simulate_meanfield_paths(const Config& c, Scenario scenario, std::size_t paths,
                                          unsigned workers);

// CSV / JSON rendering. Every document starts with the config fingerprint
// and seed.
std::string render_risk_table_csv(const RiskTable& t, const Config& c);
std::string render_risk_reports_json(const RiskTable& t, const Config& c);
std::string render_convergence_csv(const std::vector<ConvergenceRow>& rows, const Config& c);
std::string render_phi_csv(const PhiTable& phi, const Config& c);
std::string render_summaries_csv(const SimulationOutput& out, const Config& c);
std::string render_trajectory_csv(const SimulationOutput& out, const Config& c);

nlohmann::json to_json(const RiskReport& r);

/// Writes via a temporary file in the same directory and renames it over the target.
void write_atomically(const std::filesystem::path& target, const std::string& content);

}  // namespace bubblenet
