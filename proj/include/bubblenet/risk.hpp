#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubblenet/bubble.hpp"
#include "bubblenet/meanfield.hpp"
#include "bubblenet/params.hpp"

namespace bubblenet {

struct LossSample {
  double tau = 0.0;
  double loss = 0.0;  // (rho(tau + Delta) - rho(tau)) / rho(tau)
  std::uint32_t path_id = 0;
};

enum class Exclusion : std::size_t {
  none = 0,
  no_burst,
  beyond_horizon,
  degenerate_denominator,
  degenerate_ratio,
  count_
};
const char* to_string(Exclusion e);

struct ShockResult {
  std::optional<LossSample> sample;
  Exclusion reason = Exclusion::none;
};

/// Relative robustness change of a monitored series over [tau, tau + Delta],
/// both given as grid indices. Excludes the path when |rho(tau)| < floor or
/// tau + Delta falls outside the series.
ShockResult relative_shock(std::span<const double> series, std::size_t tau_index,
                           std::size_t window_steps, double dt, double floor,
                           std::uint32_t path_id = 0);

/// -sup{x : F(x) <= alpha} for the empirical CDF F of the losses.
double risk_alpha(std::span<const double> losses, double alpha);
double risk_alpha(std::span<const LossSample> samples, double alpha);

enum class ScenarioKind {
  bubble_finite,
  counterfactual_finite,
  static_finite,
  bubble_mf,
  counterfactual_mf,
  static_mf
};
const char* to_string(ScenarioKind s);
ScenarioKind scenario_from_string(const std::string& s);
bool is_meanfield(ScenarioKind s);
bool is_static(ScenarioKind s);

struct RiskSettings {
  double alpha = 0.05;
  double Delta = 0.1;
  std::size_t paths = 10000;
  double denominator_floor = 1e-8;
  double max_exclusion = 0.2;
};

struct PhiSettings {
  PhiMethod method = PhiMethod::quadrature;
  std::size_t budget = 100000;
};

struct RiskReport {
  std::string scenario;
  double alpha = 0.0;
  double Delta = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  int n = 0;
  int m = 0;
  std::size_t N_s = 0;
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::array<std::size_t, static_cast<std::size_t>(Exclusion::count_)> excluded_by{};
  double risk = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t cell = 0;
  std::string fingerprint;
};

struct ScenarioResult {
  RiskReport report;
  std::vector<LossSample> samples;  // ordered by path_id
};

/// Thrown when too many paths of a scenario had to be excluded.
class ExperimentError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Runs `settings.paths` independent paths of a scenario and evaluates the
/// burst risk of periphery bank 1. Paths are keyed (seed, cell, path) so the
/// result does not depend on `workers`.
ScenarioResult run_scenario(ScenarioKind scenario, NetworkParams p, const BubbleParams& b,
                            const RiskSettings& settings, const PhiSettings& phi_settings,
                            std::uint64_t seed, std::uint32_t cell, unsigned workers = 1);

/// Runs fn(i) for i in [0, count) on `workers` threads using contiguous
/// blocks; fn must only write to slot i of its output.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn);

}  // namespace bubblenet

#include "bubblenet/detail/parallel.hpp"
