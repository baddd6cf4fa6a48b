#include <cmath>
#include <numbers>

#include "bubblenet/meanfield.hpp"
#include "doctest.h"

using namespace bubblenet;

namespace {

double f_arctan(double x) { return 1.0 + 2.0 * std::atan(x) / std::numbers::pi; }

// E[X f(X)] for X ~ N(0, v) through Stein's identity:
// E[X atan X] = v E[1 / (1 + X^2)] = v sqrt(pi / 2v) e^{1/2v} erfc(1 / sqrt(2v)).
double stein_phi(double lambda, double sigma1, double t, double delta) {
  const double lag = t >= delta ? delta : 0.0;
  const double v = sigma1 * sigma1 * -std::expm1(-2.0 * lambda * (t - lag)) / (2.0 * lambda);
  const double a = 1.0 / std::sqrt(2.0 * v);
  const double e = std::sqrt(std::numbers::pi / (2.0 * v)) * std::exp(a * a) * std::erfc(a);
  return std::exp(-lambda * lag) * 2.0 / std::numbers::pi * v * e;
}

BubblePath flat_bubble(std::size_t steps, double dt) {
  BubblePath b;
  b.dt = dt;
  b.beta.assign(steps + 1, 0.0);
  b.mu.assign(steps + 1, 0.0);
  b.M.assign(steps + 1, 1.0);
  return b;
}

}  // namespace

TEST_CASE("OU moments") {
  const OUSpec s{1.0, 0.2, 0.5};
  const auto m0 = ou_moments(s, 0.0);
  CHECK(m0.mean == 0.5);
  CHECK(m0.variance == 0.0);
  const auto m1 = ou_moments(s, 1.0);
  CHECK(m1.mean == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(m1.variance == doctest::Approx(0.04 * (1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-14));
  // Small lambda t: variance ~ sigma^2 t.
  const auto tiny = ou_moments(OUSpec{1e-9, 0.2, 0.5}, 2.0);
  CHECK(tiny.variance == doctest::Approx(0.08).epsilon(1e-8));
  CHECK_THROWS_AS(ou_moments(s, -1.0), ConfigError);
}

TEST_CASE("OU Euler step") {
  const OUSpec s{2.0, 0.3, 0.5};
  CHECK(ou_euler_step(s, 1.0, 0.01, 0.0) == doctest::Approx(0.98));
  CHECK(ou_euler_step(s, 0.0, 0.01, 0.5) == doctest::Approx(0.15));
}

TEST_CASE("Gauss-Hermite rule integrates polynomials exactly") {
  const auto rule = gauss_hermite(64);
  double w = 0, x2 = 0, x4 = 0, x1 = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    w += rule.weights[i];
    x1 += rule.weights[i] * rule.nodes[i];
    x2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
    x4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[63 - i]).epsilon(1e-14));
  }
  const double sp = std::sqrt(std::numbers::pi);
  CHECK(w == doctest::Approx(sp).epsilon(1e-13));
  CHECK(std::abs(x1) < 1e-13);
  CHECK(x2 == doctest::Approx(sp / 2.0).epsilon(1e-13));
  CHECK(x4 == doctest::Approx(3.0 * sp / 4.0).epsilon(1e-13));

  const auto small = gauss_hermite(3);
  CHECK(small.nodes[0] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-14));
  CHECK(small.nodes[1] == doctest::Approx(0.0));
  CHECK(small.weights[1] == doctest::Approx(2.0 * sp / 3.0).epsilon(1e-14));
}

TEST_CASE("phi by quadrature matches frozen high-precision values") {
  const auto f = FitnessFn::arctan();
  // Reference values from 30-digit adaptive quadrature of E[X f(X)].
  CHECK(phi({1.0, 0.2, 0.5}, f, 1.0, 0.1, PhiMethod::quadrature, 0).value ==
        doctest::Approx(0.009463282244440481621).epsilon(1e-11));
  CHECK(phi({0.5, 0.2, 0.5}, f, 2.0, 0.3, PhiMethod::quadrature, 0).value ==
        doctest::Approx(0.01737781744213637596).epsilon(1e-11));
  CHECK(phi({2.0, 0.2, 0.5}, f, 0.05, 0.1, PhiMethod::quadrature, 0).value ==
        doctest::Approx(0.0011519153012804218763).epsilon(1e-11));
  CHECK(phi({1.0, 0.2, 0.5}, f, 0.5, 0.0, PhiMethod::quadrature, 0).value ==
        doctest::Approx(0.0079502922573016727936).epsilon(1e-11));
}

TEST_CASE("phi by quadrature matches the Stein closed form") {
  for (double lambda : {0.5, 1.0, 2.0})
    for (double t : {0.1, 0.4, 1.0, 3.0})
      for (double delta : {0.0, 0.05, 0.2}) {
        const double q = phi({lambda, 0.2, 0.5}, FitnessFn::arctan(), t, delta,
                             PhiMethod::quadrature, 0).value;
        CHECK(q == doctest::Approx(stein_phi(lambda, 0.2, t, delta)).epsilon(1e-10));
      }
}

TEST_CASE("phi vanishes for constant fitness and at t = 0") {
  const OUSpec s{1.0, 0.2, 0.5};
  CHECK(phi(s, FitnessFn::constant(1.0), 0.7, 0.1, PhiMethod::quadrature, 0).value == 0.0);
  CHECK(phi(s, FitnessFn::arctan(), 0.0, 0.0, PhiMethod::quadrature, 0).value == 0.0);
  const auto mc = phi(s, FitnessFn::constant(1.0), 0.7, 0.1, PhiMethod::monte_carlo, 100000,
                      PathKey{5, 1, 0});
  CHECK(std::abs(mc.value) < 3.0 * mc.std_error);
}

TEST_CASE("phi Monte Carlo agrees with quadrature") {
  const OUSpec s{1.0, 0.2, 0.5};
  for (double t : {0.05, 0.3, 1.0})
    for (double delta : {0.0, 0.1}) {
      const auto q = phi(s, FitnessFn::arctan(), t, delta, PhiMethod::quadrature, 0);
      const auto mc = phi(s, FitnessFn::arctan(), t, delta, PhiMethod::monte_carlo, 100000,
                          PathKey{17, 3, static_cast<std::uint32_t>(t * 100 + delta * 10)});
      CHECK(mc.std_error > 0.0);
      CHECK(std::abs(mc.value - q.value) < 3.0 * mc.std_error);
    }
}

TEST_CASE("phi is bounded by K2 times the OU standard deviation") {
  const double K2 = estimate_lipschitz(FitnessFn::arctan(), 100.0, 801).K2;
  for (double lambda : {0.25, 1.0, 4.0}) {
    const OUSpec s{lambda, 0.2, 0.5};
    for (double t : {0.01, 0.5, 2.0, 10.0})
      for (double delta : {0.0, 0.1, 0.5}) {
        const double v = phi(s, FitnessFn::arctan(), t, delta, PhiMethod::quadrature, 0).value;
        const double lag = t >= delta ? delta : 0.0;
        CHECK(std::abs(v) <= K2 * std::sqrt(ou_moments(s, t - lag).variance) + 1e-15);
        CHECK(std::abs(v) <= K2 * 0.2 / std::sqrt(2.0 * lambda));
      }
  }
}

TEST_CASE("phi table switches to the lagged form at the delay index") {
  const OUSpec s{1.0, 0.2, 0.5};
  const auto table = build_phi_table(s, FitnessFn::arctan(), 0.01, 50, 10, PhiMethod::quadrature, 0);
  REQUIRE(table.values.size() == 51);
  for (std::size_t j = 0; j <= 50; ++j) {
    const double t = 0.01 * static_cast<double>(j);
    const double delta = j >= 10 ? 0.1 : 0.0;
    CHECK(table.values[j] ==
          doctest::Approx(phi(s, FitnessFn::arctan(), t, delta, PhiMethod::quadrature, 0).value));
  }
}

TEST_CASE("limit system: homogeneous noiseless start is an exact fixed point") {
  NetworkParams p;
  p.sigma1 = p.sigma2 = 0.0;
  const Drivers d = Drivers::standard(PathKey{1, 0, 0}, 1, 2);
  const auto phi_t = build_phi_table(OUSpec::from(p), p.f_P, p.dt, p.horizon_steps(),
                                     p.delay_steps(), PhiMethod::quadrature, 0);
  const MeanFieldPath path = simulate_meanfield(p, flat_bubble(p.horizon_steps(), p.dt), phi_t, d,
                                                Scenario::bubble);
  for (std::size_t j = 0; j <= p.horizon_steps(); ++j) {
    CHECK(path.rho_bar_1[j] == p.rho0);
    CHECK(path.rho_bar_core_1[j] == p.rho0);
  }
}

TEST_CASE("limit system: nu follows rho0 (1 - e^{-lambda t})") {
  NetworkParams p;
  p.sigma1 = p.sigma2 = 0.0;
  p.lambda = 1.7;
  p.horizon = 2.0;
  const Drivers d = Drivers::standard(PathKey{1, 0, 0}, 1, 2);
  const auto phi_t = build_phi_table(OUSpec::from(p), p.f_P, p.dt, p.horizon_steps(),
                                     p.delay_steps(), PhiMethod::quadrature, 0);
  const MeanFieldPath path = simulate_meanfield(p, flat_bubble(p.horizon_steps(), p.dt), phi_t, d,
                                                Scenario::no_core_shock);
  for (std::size_t j = 0; j <= p.horizon_steps(); j += 100) {
    const double t = static_cast<double>(j) * p.dt;
    // Exact for the discretised mean, within O(dt) of the continuous one.
    const double discrete = p.rho0 * (1.0 - std::pow(1.0 - p.lambda * p.dt, static_cast<double>(j)));
    CHECK(path.nu[j] == doctest::Approx(discrete).epsilon(1e-12));
    CHECK(std::abs(path.nu[j] - p.rho0 * (1.0 - std::exp(-p.lambda * t))) < p.lambda * p.dt);
  }
}

TEST_CASE("limit system: periphery limit minus nu is the OU fluctuation") {
  NetworkParams p;
  BubbleParams b;
  b.burst = BurstPolicy::deterministic(0.5);
  b.sigma_bar = 0.4;
  const PathKey key{21, 0, 0};
  const BubblePath bubble =
      simulate_bubble(b, p.dt, p.horizon_steps(), NormalStream(key, 0), NormalStream(key, 2));
  const auto phi_t = build_phi_table(OUSpec::from(p), p.f_P, p.dt, p.horizon_steps(),
                                     p.delay_steps(), PhiMethod::quadrature, 0);
  const Drivers d = Drivers::standard(key, 6, 2);
  const MeanFieldPath path = simulate_meanfield(p, bubble, phi_t, d, Scenario::bubble);
  for (std::size_t j = 0; j <= p.horizon_steps(); ++j)
    CHECK(path.rho_bar_1[j] - path.nu[j] == doctest::Approx(path.rho_tilde_1[j]).epsilon(1e-12));
}

TEST_CASE("limit system: each step matches a direct transcription") {
  NetworkParams p;
  p.dt = 0.01;
  p.delta = 0.05;
  p.horizon = 0.5;
  p.lambda = 1.3;
  p.rho0_core = {0.9, 0.2};
  BubbleParams b;
  b.burst = BurstPolicy::deterministic(0.25);
  b.sigma_bar = 0.4;
  const PathKey key{22, 5, 1};
  const BubblePath bubble =
      simulate_bubble(b, p.dt, p.horizon_steps(), NormalStream(key, 0), NormalStream(key, 2));
  const auto phi_t = build_phi_table(OUSpec::from(p), p.f_P, p.dt, p.horizon_steps(),
                                     p.delay_steps(), PhiMethod::quadrature, 0);
  const Drivers d = Drivers::standard(key, 6, 2);
  MeanFieldOptions o;
  o.stride = 1;
  const MeanFieldPath path = simulate_meanfield(p, bubble, phi_t, d, Scenario::bubble, o);
  const std::size_t w = path.row_width();
  const std::size_t L = p.delay_steps();
  const double sq = std::sqrt(p.dt);

  for (std::size_t j = 0; j < p.horizon_steps(); ++j) {
    const double* now = path.trajectory.data() + j * w;
    const double* lag = path.trajectory.data() + (j >= L ? j - L : j) * w;
    const double* next = now + w;
    const double E = p.rho0 * std::pow(1.0 - p.lambda * p.dt, static_cast<double>(j));
    const double E_lag = p.rho0 * std::pow(1.0 - p.lambda * p.dt, static_cast<double>(j >= L ? j - L : j));
    const double nu = now[1];
    double dev[2], dev_lag[2];
    for (int k = 0; k < 2; ++k) {
      dev[k] = now[2 + k] - nu - E;
      dev_lag[k] = lag[2 + k] - lag[1] - E_lag;
    }
    const double phi_j = phi_t.values[j];
    double sum = 0.0;
    for (int k = 0; k < 2; ++k) sum += f_arctan(dev_lag[k]) * dev[k];
    CHECK(next[1] == doctest::Approx(nu + (phi_j + sum / 2.0 + p.lambda * E) * p.dt).epsilon(1e-12));
    for (int k = 0; k < 2; ++k) {
      const int other = 1 - k;
      const double drift = phi_j + f_arctan(dev_lag[other]) * dev[other] +
                           p.lambda * (E + nu - now[2 + k]);
      const double expect = now[2 + k] + drift * p.dt +
                            p.sigma2 * sq * NormalStream(key, d.core[k]).at(j) + bubble.increment(j);
      CHECK(next[2 + k] == doctest::Approx(expect).epsilon(1e-12));
    }
    const double tilde = now[4];
    CHECK(next[4] == doctest::Approx(tilde - p.lambda * tilde * p.dt +
                                     p.sigma1 * sq * NormalStream(key, d.periphery[0]).at(j))
                         .epsilon(1e-12));
  }
}
