#include "bubblenet/meanfield.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bubblenet {

OUMoments ou_moments(const OUSpec& spec, double t) {
  if (!(t >= 0.0)) throw ConfigError("ou_moments: t must be >= 0");
  const double mean = spec.rho0 * std::exp(-spec.lambda * t);
  const double var =
      spec.sigma1 * spec.sigma1 * -std::expm1(-2.0 * spec.lambda * t) / (2.0 * spec.lambda);
  return {mean, var};
}

double ou_euler_step(const OUSpec& spec, double x, double dt, double dW) {
  return x - spec.lambda * x * dt + spec.sigma1 * dW;
}

GaussHermiteRule gauss_hermite(std::size_t order) {
  if (order == 0) throw ConfigError("gauss_hermite: order must be positive");
  const double n = static_cast<double>(order);
  GaussHermiteRule rule;
  rule.nodes.assign(order, 0.0);
  rule.weights.assign(order, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);

  // Newton iteration on orthonormal Hermite polynomials; roots are found from
  // the largest down, each seeded from its predecessors.
  double z = 0.0;
  for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(n, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * rule.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * rule.nodes[1];
    else
      z = 2.0 * z - rule.nodes[i - 2];

    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4, p2 = 0.0;
      for (std::size_t j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jj = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jj + 1.0)) * p2 - std::sqrt(jj / (jj + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z_prev = z;
      z = z_prev - p1 / pp;
      if (std::abs(z - z_prev) <= 1e-14 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z;
    rule.nodes[order - 1 - i] = -z;
    rule.weights[i] = rule.weights[order - 1 - i] = 2.0 / (pp * pp);
  }
  return rule;
}

const char* to_string(PhiMethod m) {
  return m == PhiMethod::quadrature ? "quadrature" : "monte_carlo";
}

PhiMethod phi_method_from_string(const std::string& s) {
  if (s == "quadrature") return PhiMethod::quadrature;
  if (s == "monte_carlo") return PhiMethod::monte_carlo;
  throw ConfigError("unknown phi method '" + s + "'");
}

namespace {

constexpr std::size_t kQuadratureOrder = 64;

const GaussHermiteRule& default_rule() {
  static const GaussHermiteRule rule = gauss_hermite(kQuadratureOrder);
  return rule;
}

double expected_F(const FitnessFn& f, double variance) {
  if (variance <= 0.0) return 0.0;
  if (f.kind == FitnessFn::Kind::constant) return 0.0;  // c E[X] with X centred
  const auto& rule = default_rule();
  const double scale = std::sqrt(2.0 * variance);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = scale * rule.nodes[i];
    acc += rule.weights[i] * x * f(x);
  }
  return acc / std::sqrt(std::numbers::pi);
}

}  // namespace

PhiEstimate phi(const OUSpec& spec, const FitnessFn& f, double t, double delta, PhiMethod method,
                std::size_t budget, PathKey key) {
  if (!(t >= 0.0)) throw ConfigError("phi: t must be >= 0");
  if (!(delta >= 0.0)) throw ConfigError("phi: delta must be >= 0");

  const double lag = t >= delta ? delta : 0.0;
  const double var_lagged = ou_moments(spec, t - lag).variance;
  const double decay = std::exp(-spec.lambda * lag);

  if (method == PhiMethod::quadrature) return {decay * expected_F(f, var_lagged), 0.0};

  if (budget < 2) throw ConfigError("phi: Monte Carlo budget must be >= 2");
  const double sd_x = std::sqrt(var_lagged);
  const double sd_z = spec.sigma1 * std::sqrt(-std::expm1(-2.0 * spec.lambda * lag) /
                                              (2.0 * spec.lambda));
  NormalStream zx(key, 0), zz(key, 1);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < budget; ++s) {
    const double x = sd_x * zx.next();
    const double y = decay * x + sd_z * zz.next();
    const double v = f(x) * y;
    sum += v;
    sum_sq += v * v;
  }
  const double N = static_cast<double>(budget);
  const double mean = sum / N;
  const double var = std::max(0.0, (sum_sq - N * mean * mean) / (N - 1.0));
  return {mean, std::sqrt(var / N)};
}

PhiTable build_phi_table(const OUSpec& spec, const FitnessFn& f, double dt, std::size_t steps,
                         std::size_t delay_steps, PhiMethod method, std::size_t budget,
                         PathKey key) {
  PhiTable table;
  table.dt = dt;
  table.delay_steps = delay_steps;
  table.method = method;
  table.values.resize(steps + 1);
  table.std_errors.resize(steps + 1);
  const double delta = static_cast<double>(delay_steps) * dt;
  for (std::size_t j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    // Evaluate on indices so the lag switch matches the simulators exactly.
    const double eff_delta = j >= delay_steps ? delta : 0.0;
    PathKey k = key;
    k.path = static_cast<std::uint32_t>(j);
    const PhiEstimate e = phi(spec, f, t, eff_delta, method, budget, k);
    table.values[j] = e.value;
    table.std_errors[j] = e.std_error;
  }
  return table;
}

MeanFieldPath simulate_meanfield(const NetworkParams& p, const BubblePath& bubble,
                                 const PhiTable& phi_table, const Drivers& drivers,
                                 Scenario scenario, const MeanFieldOptions& opts) {
  const std::size_t m = static_cast<std::size_t>(p.m);
  const std::size_t tracked = opts.n_tracked;
  const std::size_t delay = p.delay_steps();
  const std::size_t stop = opts.stop_step.value_or(p.horizon_steps());

  if (tracked == 0) throw std::invalid_argument("simulate_meanfield: n_tracked must be >= 1");
  if (drivers.core.size() != m || drivers.periphery.size() < tracked)
    throw std::invalid_argument("simulate_meanfield: driver stream count mismatch");
  if (phi_table.values.size() < stop + 1 || phi_table.delay_steps != delay ||
      std::abs(phi_table.dt - p.dt) > 1e-15)
    throw std::invalid_argument("simulate_meanfield: phi table does not cover the run grid");
  if (scenario != Scenario::no_core_shock && bubble.steps() < stop)
    throw std::invalid_argument("simulate_meanfield: bubble path shorter than the run");
  if (scenario == Scenario::counterfactual && bubble.tau_index && !opts.rho1_bubble_at_tau)
    throw std::invalid_argument("simulate_meanfield: counterfactual run needs the bubble-run rho at tau");

  std::vector<NormalStream> noise_core, noise_ou;
  for (auto id : drivers.core) noise_core.emplace_back(drivers.key, id);
  for (std::size_t i = 0; i < tracked; ++i) noise_ou.emplace_back(drivers.key, drivers.periphery[i]);

  MeanFieldPath out;
  out.dt = p.dt;
  out.m = m;
  out.n_tracked = tracked;
  out.steps = stop;
  out.tau_index = bubble.tau_index;
  out.nu.resize(stop + 1);
  out.rho_bar_core_1.resize(stop + 1);
  out.rho_tilde_1.resize(stop + 1);
  out.rho_bar_1.resize(stop + 1);

  // The common level u = nu + E is stepped instead of nu itself, with E the
  // mean of the discretised OU fluctuation. In a homogeneous noiseless start
  // the drift of u vanishes identically, so the fixed point is exact.
  const OUSpec ou = OUSpec::from(p);
  double mean_tilde = p.rho0;
  double level = p.rho0;
  std::vector<double> core = p.rho0_core;
  std::vector<double> tilde(tracked, p.rho0);
  std::vector<double> dev(m), drift_core(m);
  std::vector<double> ring((delay + 1) * m, 0.0);  // lagged f^B weights

  const double sqdt = std::sqrt(p.dt);
  const double inv_m = 1.0 / static_cast<double>(m);
  const double inv_m1 = 1.0 / static_cast<double>(m - 1);
  double ratio = 0.0;
  double shock_level = 0.0;

  for (std::size_t j = 0;; ++j) {
    const double t = static_cast<double>(j) * p.dt;
    const double nu = level - mean_tilde;

    double* w_now = ring.data() + (j % (delay + 1)) * m;
    for (std::size_t k = 0; k < m; ++k) {
      dev[k] = core[k] - level;
      w_now[k] = p.f_B(dev[k]);
    }
    const double* w_lag = ring.data() + ((j >= delay ? j - delay : j) % (delay + 1)) * m;

    out.nu[j] = nu;
    out.rho_bar_core_1[j] = core[0];
    out.rho_tilde_1[j] = tilde[0];
    out.rho_bar_1[j] = level + (tilde[0] - mean_tilde);
    if (opts.stride > 0 && j % opts.stride == 0) {
      auto& tr = out.trajectory;
      tr.push_back(t);
      tr.push_back(nu);
      tr.insert(tr.end(), core.begin(), core.end());
      tr.insert(tr.end(), tilde.begin(), tilde.end());
      for (double x : tilde) tr.push_back(level + (x - mean_tilde));
      tr.push_back(shock_level);
      tr.push_back(j < bubble.mu.size() ? bubble.mu[j] : 0.0);
      tr.push_back(j < bubble.M.size() ? bubble.M[j] : 0.0);
    }
    if (j == stop) break;

    if (scenario == Scenario::counterfactual && bubble.tau_index && j == *bubble.tau_index) {
      ratio = counterfactual_ratio(out.rho_bar_1[j], *opts.rho1_bubble_at_tau);
      out.shock_ratio = ratio;
    }

    const double phi_j = phi_table.values[j];
    double sum_c = 0.0;
    for (std::size_t k = 0; k < m; ++k) sum_c += w_lag[k] * dev[k];
    const double drift_level = phi_j + sum_c * inv_m;
    for (std::size_t k = 0; k < m; ++k)
      drift_core[k] = phi_j + (sum_c - w_lag[k] * dev[k]) * inv_m1 - p.lambda * dev[k];

    double shock = 0.0;
    switch (scenario) {
      case Scenario::bubble: shock = bubble.increment(j); break;
      case Scenario::counterfactual:
        if (bubble.tau_index && j >= *bubble.tau_index) shock = ratio * bubble.increment(j);
        break;
      case Scenario::no_core_shock: break;
    }
    shock_level += shock;

    for (std::size_t k = 0; k < m; ++k)
      core[k] += drift_core[k] * p.dt + p.sigma2 * sqdt * noise_core[k].next() + shock;
    for (std::size_t i = 0; i < tracked; ++i)
      tilde[i] = ou_euler_step(ou, tilde[i], p.dt, sqdt * noise_ou[i].next());
    mean_tilde = ou_euler_step(ou, mean_tilde, p.dt, 0.0);
    level += drift_level * p.dt;

    if (!std::isfinite(level)) throw NumericalError("simulate_meanfield: nu diverged");
  }
  return out;
}

}  // namespace bubblenet
