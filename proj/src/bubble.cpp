#include "bubblenet/bubble.hpp"

#include <algorithm>
#include <cmath>

#include "bubblenet/params.hpp"

namespace bubblenet {

const char* to_string(BubbleParams::VolMode mode) {
  return mode == BubbleParams::VolMode::constant ? "constant" : "state_dependent";
}

const char* to_string(BurstPolicy::Kind kind) {
  return kind == BurstPolicy::Kind::deterministic ? "deterministic" : "drawdown";
}

BubbleParams::VolMode vol_mode_from_string(const std::string& s) {
  if (s == "constant") return BubbleParams::VolMode::constant;
  if (s == "state_dependent") return BubbleParams::VolMode::state_dependent;
  throw ConfigError("unknown bubble.vol_mode '" + s + "'");
}

BurstPolicy::Kind burst_kind_from_string(const std::string& s) {
  if (s == "deterministic") return BurstPolicy::Kind::deterministic;
  if (s == "drawdown") return BurstPolicy::Kind::drawdown;
  throw ConfigError("unknown burst.kind '" + s + "'");
}

BubbleParams validate_bubble(const BubbleParams& b, double horizon, double dt) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(std::isfinite(b.sigmaB) && b.sigmaB > 0.0, "bubble.sigmaB must be > 0");
  require(std::isfinite(b.k) && b.k >= 0.0, "bubble.k must be >= 0");
  require(std::isfinite(b.mu_bar), "bubble.mu_bar must be finite");
  require(std::isfinite(b.sigma_bar) && b.sigma_bar > 0.0, "bubble.sigma_bar must be > 0");
  require(std::isfinite(b.Lambda) && b.Lambda >= 0.0, "bubble.Lambda must be >= 0");
  require(std::isfinite(b.M0) && b.M0 > 0.0, "bubble.M0 must be > 0");
  require(std::isfinite(b.muM), "bubble.muM must be finite");
  require(std::isfinite(b.sigmaM) && b.sigmaM > 0.0, "bubble.sigmaM must be > 0");
  if (b.burst.kind == BurstPolicy::Kind::deterministic) {
    require(b.burst.t_burst > 0.0 && b.burst.t_burst < horizon, "burst.t must lie in (0, horizon)");
    steps_on_grid(b.burst.t_burst, dt, "burst.t");
  } else {
    require(b.burst.q > 0.0 && b.burst.q < 1.0, "burst.q must lie in (0, 1)");
    require(std::isfinite(b.burst.beta_star) && b.burst.beta_star > 0.0,
            "burst.beta_star must be > 0");
  }
  return b;
}

std::optional<double> BubblePath::tau() const {
  if (!tau_index) return std::nullopt;
  return static_cast<double>(*tau_index) * dt;
}

double step_illiquidity(double M, double dW3, double dt, const BubbleParams& p) {
  if (!(M > 0.0)) throw NumericalError("step_illiquidity: illiquidity must stay positive");
  if (!(dt > 0.0)) throw ConfigError("step_illiquidity: dt must be > 0");
  return M * std::exp((p.muM - 0.5 * p.sigmaM * p.sigmaM) * dt + p.sigmaM * dW3);
}

BubbleStep step_bubble(double beta, double M, double dW_B, double dt, const BubbleParams& p,
                       bool post_burst) {
  const double mu_bar = post_burst ? 0.0 : p.mu_bar;
  const double scale = M * p.Lambda;
  const double mu = scale * (-p.k * beta + 2.0 * mu_bar);
  const double vol =
      p.vol_mode == BubbleParams::VolMode::constant ? p.sigmaB : 2.0 * p.sigma_bar * scale;
  return {beta + mu * dt + vol * dW_B, mu};
}

BurstDetector::BurstDetector(const BurstPolicy& policy, double dt) : policy_(policy) {
  if (policy.kind == BurstPolicy::Kind::deterministic)
    deterministic_index_ = steps_on_grid(policy.t_burst, dt, "burst.t");
}

bool BurstDetector::observe(std::size_t index, double beta) {
  if (tau_) return false;
  if (policy_.kind == BurstPolicy::Kind::deterministic) {
    if (index == deterministic_index_) tau_ = index;
    return tau_.has_value();
  }
  running_max_ = started_ ? std::max(running_max_, beta) : beta;
  started_ = true;
  if (running_max_ > policy_.beta_star && beta <= policy_.q * running_max_) tau_ = index;
  return tau_.has_value();
}

std::optional<std::size_t> detect_burst(std::span<const double> beta, double dt,
                                        const BurstPolicy& policy) {
  BurstDetector det(policy, dt);
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (det.observe(j, beta[j])) return det.tau_index();
  return std::nullopt;
}

BubblePath simulate_bubble(const BubbleParams& p, double dt, std::size_t steps, NormalStream b1,
                           NormalStream b3, std::optional<std::size_t> steps_after_burst) {
  BubblePath path;
  path.dt = dt;
  path.beta.resize(steps + 1);
  path.mu.resize(steps + 1);
  path.M.resize(steps + 1);

  const double sqdt = std::sqrt(dt);
  BurstDetector det(p.burst, dt);
  b1.seek(0);
  b3.seek(0);

  double beta = 0.0;
  double M = p.M0;
  for (std::size_t j = 0;; ++j) {
    path.beta[j] = beta;
    path.M[j] = M;
    det.observe(j, beta);
    const bool post = det.tau_index().has_value();
    if (post && steps_after_burst && j - *det.tau_index() == *steps_after_burst && j < steps) {
      path.beta.resize(j + 1);
      path.mu.resize(j + 1);
      path.M.resize(j + 1);
      steps = j;
    }
    if (j == steps) {
      path.mu[j] = M * p.Lambda * (-p.k * beta + 2.0 * (post ? 0.0 : p.mu_bar));
      break;
    }
    const BubbleStep s = step_bubble(beta, M, sqdt * b1.next(), dt, p, post);
    path.mu[j] = s.mu;
    beta = s.beta_next;
    M = step_illiquidity(M, sqdt * b3.next(), dt, p);
  }
  path.tau_index = det.tau_index();
  return path;
}

double counterfactual_ratio(double rho_counterfactual, double rho_bubble) {
  if (rho_bubble == 0.0) throw NumericalError("counterfactual ratio: bubble-run robustness is 0");
  const double r = rho_counterfactual / rho_bubble;
  if (!std::isfinite(r)) throw NumericalError("counterfactual ratio is not finite");
  return r;
}

std::vector<double> counterfactual_beta(const BubblePath& path, std::size_t tau_index,
                                        double ratio) {
  const std::size_t steps = path.steps();
  if (tau_index > steps) throw ConfigError("counterfactual_beta: tau beyond path");
  std::vector<double> inc(steps, 0.0);
  for (std::size_t j = tau_index; j < steps; ++j) inc[j] = ratio * path.increment(j);
  return inc;
}

}  // namespace bubblenet
