#include "bubblenet/finite_net.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bubblenet {

NetworkState NetworkState::initial(const NetworkParams& p) {
  NetworkState s;
  s.rho_periphery.assign(static_cast<std::size_t>(p.n), p.rho0);
  s.rho_core = p.rho0_core;
  return s;
}

double mean_robustness(const NetworkState& s) {
  const double total = std::accumulate(s.rho_periphery.begin(), s.rho_periphery.end(), 0.0) +
                       std::accumulate(s.rho_core.begin(), s.rho_core.end(), 0.0);
  return total / static_cast<double>(s.rho_periphery.size() + s.rho_core.size());
}

namespace {

void check_shape(const NetworkState& s, const NetworkParams& p, const char* what) {
  if (s.rho_periphery.size() != static_cast<std::size_t>(p.n) ||
      s.rho_core.size() != static_cast<std::size_t>(p.m))
    throw std::invalid_argument(std::string(what) + ": state does not match n, m");
}

}  // namespace

double periphery_drift(std::size_t i, const NetworkState& now, const NetworkState& lagged,
                       const NetworkParams& p) {
  check_shape(now, p, "periphery_drift");
  check_shape(lagged, p, "periphery_drift");
  if (i >= now.rho_periphery.size()) throw std::out_of_range("periphery_drift: index");

  const double A = mean_robustness(now);
  const double A_lag = mean_robustness(lagged);
  double periphery_sum = 0.0;
  for (std::size_t j = 0; j < now.rho_periphery.size(); ++j) {
    if (j == i) continue;
    periphery_sum += p.f_P(lagged.rho_periphery[j] - A_lag) * (now.rho_periphery[j] - A);
  }
  double core_sum = 0.0;
  for (std::size_t k = 0; k < now.rho_core.size(); ++k)
    core_sum += p.f_B(lagged.rho_core[k] - A_lag) * (now.rho_core[k] - A);

  return periphery_sum / static_cast<double>(p.n - 1) + core_sum / static_cast<double>(p.m) +
         p.lambda * (A - now.rho_periphery[i]);
}

double core_drift(std::size_t k, const NetworkState& now, const NetworkState& lagged,
                  const NetworkParams& p) {
  check_shape(now, p, "core_drift");
  check_shape(lagged, p, "core_drift");
  if (k >= now.rho_core.size()) throw std::out_of_range("core_drift: index");

  const double A = mean_robustness(now);
  const double A_lag = mean_robustness(lagged);
  double periphery_sum = 0.0;
  for (std::size_t i = 0; i < now.rho_periphery.size(); ++i)
    periphery_sum += p.f_P(lagged.rho_periphery[i] - A_lag) * (now.rho_periphery[i] - A);
  double core_sum = 0.0;
  for (std::size_t l = 0; l < now.rho_core.size(); ++l) {
    if (l == k) continue;
    core_sum += p.f_B(lagged.rho_core[l] - A_lag) * (now.rho_core[l] - A);
  }

  return periphery_sum / static_cast<double>(p.n) + core_sum / static_cast<double>(p.m - 1) +
         p.lambda * (A - now.rho_core[k]);
}

DelayBuffer::DelayBuffer(std::size_t delay_steps, std::size_t n, std::size_t m)
    : delay_(delay_steps),
      n_(n),
      m_(m),
      states_(delay_steps + 1),
      weights_((delay_steps + 1) * (n + m), 0.0) {}

std::size_t DelayBuffer::slot_for(std::size_t step) const {
  if (!latest_ || step > *latest_)
    throw std::logic_error("DelayBuffer: lookup beyond recorded history");
  const std::size_t target = step >= delay_ ? step - delay_ : step;
  if (*latest_ - target > delay_)
    throw std::logic_error("DelayBuffer: lookup before retained history");
  return target % states_.size();
}

void DelayBuffer::push(std::size_t step, const NetworkState& s, const FitnessFn& f_P,
                       const FitnessFn& f_B) {
  if (latest_ ? step != *latest_ + 1 : step != 0)
    throw std::logic_error("DelayBuffer: steps must be pushed in order");
  const std::size_t slot = step % states_.size();
  NetworkState& dst = states_[slot];
  dst.rho_periphery.assign(s.rho_periphery.begin(), s.rho_periphery.end());
  dst.rho_core.assign(s.rho_core.begin(), s.rho_core.end());
  dst.t = s.t;

  const double A = mean_robustness(s);
  double* w = weights_.data() + slot * (n_ + m_);
  for (std::size_t i = 0; i < n_; ++i) w[i] = f_P(s.rho_periphery[i] - A);
  for (std::size_t k = 0; k < m_; ++k) w[n_ + k] = f_B(s.rho_core[k] - A);
  latest_ = step;
}

const NetworkState& DelayBuffer::lagged_state(std::size_t step) const {
  return states_[slot_for(step)];
}

std::span<const double> DelayBuffer::lagged_weights_periphery(std::size_t step) const {
  return {weights_.data() + slot_for(step) * (n_ + m_), n_};
}

std::span<const double> DelayBuffer::lagged_weights_core(std::size_t step) const {
  return {weights_.data() + slot_for(step) * (n_ + m_) + n_, m_};
}

NetworkState delay_lookup(const DelayBuffer& h, double t, double delta, double dt) {
  if (steps_on_grid(delta, dt, "delta") != h.delay_steps())
    throw std::invalid_argument("delay_lookup: delta does not match buffer");
  return h.lagged_state(steps_on_grid(t, dt, "t"));
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::bubble: return "bubble";
    case Scenario::counterfactual: return "counterfactual";
    case Scenario::no_core_shock: return "no_core_shock";
  }
  return "?";
}

PathHistory simulate_finite(const NetworkParams& p, const BubblePath& bubble,
                            const Drivers& drivers, Scenario scenario,
                            const FiniteRunOptions& opts) {
  const std::size_t n = static_cast<std::size_t>(p.n);
  const std::size_t m = static_cast<std::size_t>(p.m);
  const std::size_t delay = p.delay_steps();
  const std::size_t stop = opts.stop_step.value_or(p.horizon_steps());

  if (drivers.periphery.size() != n || drivers.core.size() != m)
    throw std::invalid_argument("simulate_finite: driver stream count does not match n, m");
  if (scenario != Scenario::no_core_shock && bubble.steps() < stop)
    throw std::invalid_argument("simulate_finite: bubble path shorter than the run");
  if (scenario == Scenario::counterfactual && bubble.tau_index && !opts.rho1_bubble_at_tau)
    throw std::invalid_argument("simulate_finite: counterfactual run needs the bubble-run rho at tau");

  std::vector<NormalStream> noise_p, noise_c;
  noise_p.reserve(n);
  noise_c.reserve(m);
  for (auto id : drivers.periphery) noise_p.emplace_back(drivers.key, id);
  for (auto id : drivers.core) noise_c.emplace_back(drivers.key, id);

  PathHistory out;
  out.dt = p.dt;
  out.n = n;
  out.m = m;
  out.steps = stop;
  out.tau_index = bubble.tau_index;
  out.rho_periphery_1.resize(stop + 1);
  out.rho_core_1.resize(stop + 1);

  NetworkState s = NetworkState::initial(p);
  DelayBuffer buffer(delay, n, m);
  std::vector<double> dev_p(n), dev_c(m), drift_p(n), drift_c(m);

  const double sqdt = std::sqrt(p.dt);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_n1 = 1.0 / static_cast<double>(n - 1);
  const double inv_m = 1.0 / static_cast<double>(m);
  const double inv_m1 = 1.0 / static_cast<double>(m - 1);

  double ratio = 0.0;
  double shock_level = 0.0;

  for (std::size_t j = 0;; ++j) {
    s.t = static_cast<double>(j) * p.dt;
    buffer.push(j, s, p.f_P, p.f_B);
    const double A = mean_robustness(s);

    out.rho_periphery_1[j] = s.rho_periphery[0];
    out.rho_core_1[j] = s.rho_core[0];
    if (opts.stride > 0 && j % opts.stride == 0) {
      out.trajectory.push_back(s.t);
      out.trajectory.insert(out.trajectory.end(), s.rho_periphery.begin(), s.rho_periphery.end());
      out.trajectory.insert(out.trajectory.end(), s.rho_core.begin(), s.rho_core.end());
      out.trajectory.push_back(A);
      out.trajectory.push_back(shock_level);
      out.trajectory.push_back(j < bubble.mu.size() ? bubble.mu[j] : 0.0);
      out.trajectory.push_back(j < bubble.M.size() ? bubble.M[j] : 0.0);
    }
    if (j == stop) break;

    if (scenario == Scenario::counterfactual && bubble.tau_index && j == *bubble.tau_index) {
      ratio = counterfactual_ratio(s.rho_periphery[0], *opts.rho1_bubble_at_tau);
      out.shock_ratio = ratio;
    }

    const auto w_p = buffer.lagged_weights_periphery(j);
    const auto w_c = buffer.lagged_weights_core(j);
    double sum_p = 0.0, sum_c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dev_p[i] = s.rho_periphery[i] - A;
      sum_p += w_p[i] * dev_p[i];
    }
    for (std::size_t k = 0; k < m; ++k) {
      dev_c[k] = s.rho_core[k] - A;
      sum_c += w_c[k] * dev_c[k];
    }
    for (std::size_t i = 0; i < n; ++i)
      drift_p[i] = (sum_p - w_p[i] * dev_p[i]) * inv_n1 + sum_c * inv_m - p.lambda * dev_p[i];
    for (std::size_t k = 0; k < m; ++k)
      drift_c[k] = sum_p * inv_n + (sum_c - w_c[k] * dev_c[k]) * inv_m1 - p.lambda * dev_c[k];

    double shock = 0.0;
    switch (scenario) {
      case Scenario::bubble: shock = bubble.increment(j); break;
      case Scenario::counterfactual:
        if (bubble.tau_index && j >= *bubble.tau_index) shock = ratio * bubble.increment(j);
        break;
      case Scenario::no_core_shock: break;
    }
    shock_level += shock;

    for (std::size_t i = 0; i < n; ++i)
      s.rho_periphery[i] += drift_p[i] * p.dt + p.sigma1 * sqdt * noise_p[i].next();
    for (std::size_t k = 0; k < m; ++k)
      s.rho_core[k] += drift_c[k] * p.dt + p.sigma2 * sqdt * noise_c[k].next() + shock;

    for (double r : s.rho_periphery)
      if (!std::isfinite(r)) throw NumericalError("simulate_finite: robustness diverged");
  }

  out.final_state = s;
  return out;
}

}  // namespace bubblenet
