#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubblenet/rng.hpp"

namespace bubblenet {

struct BurstPolicy {
  enum class Kind { deterministic, drawdown };

  Kind kind = Kind::drawdown;
  double t_burst = 0.5;    // deterministic
  double q = 0.5;          // drawdown: trigger when beta <= q * running max
  double beta_star = 0.1;  // drawdown: arming level for the running max

  static BurstPolicy deterministic(double t) { return {Kind::deterministic, t, 0.5, 0.1}; }
  static BurstPolicy drawdown(double q, double beta_star) {
    return {Kind::drawdown, 0.5, q, beta_star};
  }
};

struct BubbleParams {
  enum class VolMode { constant, state_dependent };

  double sigmaB = 0.2;
  double k = 1.0;
  double mu_bar = 0.5;
  double sigma_bar = 0.1;
  double Lambda = 1.0;
  double M0 = 1.0;
  double muM = 0.0;
  double sigmaM = 0.2;
  VolMode vol_mode = VolMode::state_dependent;
  BurstPolicy burst;
};

const char* to_string(BubbleParams::VolMode mode);
const char* to_string(BurstPolicy::Kind kind);
BubbleParams::VolMode vol_mode_from_string(const std::string& s);
BurstPolicy::Kind burst_kind_from_string(const std::string& s);

/// Throws ConfigError on the first violated invariant.
BubbleParams validate_bubble(const BubbleParams& b, double horizon, double dt);

/// Bubble, drift and illiquidity on the simulation grid.
struct BubblePath {
  double dt = 0.0;
  std::vector<double> beta;
  std::vector<double> mu;
  std::vector<double> M;
  std::optional<std::size_t> tau_index;

  std::size_t steps() const { return beta.empty() ? 0 : beta.size() - 1; }
  std::optional<double> tau() const;
  /// beta[j+1] - beta[j].
  double increment(std::size_t j) const { return beta[j + 1] - beta[j]; }
};

/// Exact log-normal GBM update; dW3 is the Brownian increment over dt.
double step_illiquidity(double M, double dW3, double dt, const BubbleParams& p);

struct BubbleStep {
  double beta_next = 0.0;
  double mu = 0.0;
};

/// One Euler-Maruyama step of the bubble with drift M*Lambda*(-k beta + 2 mu_bar),
/// where mu_bar is switched off once the bubble has burst.
BubbleStep step_bubble(double beta, double M, double dW_B, double dt, const BubbleParams& p,
                       bool post_burst);

/// Online burst rule. observe() must be fed beta_0, beta_1, ... in order and
/// returns true exactly once, at the burst index.
class BurstDetector {
 public:
  BurstDetector(const BurstPolicy& policy, double dt);

  bool observe(std::size_t index, double beta);
  std::optional<std::size_t> tau_index() const { return tau_; }

 private:
  BurstPolicy policy_;
  std::size_t deterministic_index_ = 0;
  double running_max_ = 0.0;
  bool started_ = false;
  std::optional<std::size_t> tau_;
};

/// Burst index for a recorded beta series (grid step dt), if any.
std::optional<std::size_t> detect_burst(std::span<const double> beta, double dt,
                                        const BurstPolicy& policy);

/// Simulates beta, mu and M over `steps` grid steps. Drivers are the bubble
/// noise B1 and the illiquidity noise B3; both are standard normals that are
/// scaled by sqrt(dt) here. With `steps_after_burst` set, the path ends that
/// many steps after tau (or at `steps`, whichever comes first).
BubblePath simulate_bubble(const BubbleParams& p, double dt, std::size_t steps, NormalStream b1,
                           NormalStream b3,
                           std::optional<std::size_t> steps_after_burst = std::nullopt);

/// Ratio rho_cf / rho_bubble at the burst; throws NumericalError when the
/// bubble-run denominator is zero or the ratio is not finite.
double counterfactual_ratio(double rho_counterfactual, double rho_bubble);

/// Increments of the counterfactual shock: zero before tau, ratio * dbeta after.
std::vector<double> counterfactual_beta(const BubblePath& path, std::size_t tau_index,
                                        double ratio);

}  // namespace bubblenet
