#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bubblenet/bubble.hpp"
#include "bubblenet/params.hpp"
#include "bubblenet/rng.hpp"

namespace bubblenet {

struct NetworkState {
  std::vector<double> rho_periphery;
  std::vector<double> rho_core;
  double t = 0.0;

  static NetworkState initial(const NetworkParams& p);
};

/// Average robustness over all m + n banks.
double mean_robustness(const NetworkState& s);

/// Drift of periphery bank i: network attachment through the lagged fitness
/// weights plus attraction towards the average.
double periphery_drift(std::size_t i, const NetworkState& now, const NetworkState& lagged,
                       const NetworkParams& p);

/// Drift of core bank k, excluding the bubble increment.
double core_drift(std::size_t k, const NetworkState& now, const NetworkState& lagged,
                  const NetworkParams& p);

/// Ring buffer holding the last delay_steps + 1 grid states together with the
/// fitness weights evaluated on them.
class DelayBuffer {
 public:
  DelayBuffer(std::size_t delay_steps, std::size_t n, std::size_t m);

  /// Stores the state of grid index `step`; steps must arrive in order.
  void push(std::size_t step, const NetworkState& s, const FitnessFn& f_P, const FitnessFn& f_B);

  /// State used as the lagged argument at grid index `step`: the state at
  /// step - delay_steps, or at `step` itself while step < delay_steps.
  const NetworkState& lagged_state(std::size_t step) const;
  std::span<const double> lagged_weights_periphery(std::size_t step) const;
  std::span<const double> lagged_weights_core(std::size_t step) const;

  std::size_t delay_steps() const { return delay_; }

 private:
  std::size_t slot_for(std::size_t step) const;

  std::size_t delay_;
  std::size_t n_;
  std::size_t m_;
  std::optional<std::size_t> latest_;
  std::vector<NetworkState> states_;
  std::vector<double> weights_;  // per slot: n periphery then m core weights
};

/// Lagged lookup by time on the buffer's grid. delta must match the buffer.
NetworkState delay_lookup(const DelayBuffer& h, double t, double delta, double dt);

enum class Scenario { bubble, counterfactual, no_core_shock };
const char* to_string(Scenario s);

struct FiniteRunOptions {
  /// Last grid index to simulate; defaults to the horizon.
  std::optional<std::size_t> stop_step;
  /// Record every `stride`-th grid state into the trajectory (0 = none).
  std::size_t stride = 0;
  /// Counterfactual only: robustness of periphery bank 1 at tau in the paired
  /// bubble run over the same drivers.
  std::optional<double> rho1_bubble_at_tau;
};

/// Output of one finite-network path.
struct PathHistory {
  double dt = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t steps = 0;
  std::optional<std::size_t> tau_index;
  std::optional<double> shock_ratio;  // counterfactual runs
  std::vector<double> rho_periphery_1;  // full resolution, periphery bank 1
  std::vector<double> rho_core_1;       // full resolution, core bank 1
  /// Row-major rows of (t, rho_p_1..n, rho_c_1..m, A, beta, mu, M).
  std::vector<double> trajectory;
  NetworkState final_state;

  std::size_t row_width() const { return 1 + n + m + 4; }
};

/// Euler-Maruyama path of the delayed network driven by `drivers`, with the
/// core banks receiving the increments prescribed by `scenario`.
PathHistory simulate_finite(const NetworkParams& p, const BubblePath& bubble,
                            const Drivers& drivers, Scenario scenario,
                            const FiniteRunOptions& opts = {});

}  // namespace bubblenet
