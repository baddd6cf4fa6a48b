#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bubblenet/bubble.hpp"
#include "bubblenet/finite_net.hpp"
#include "bubblenet/params.hpp"
#include "bubblenet/rng.hpp"

namespace bubblenet {

/// Ornstein-Uhlenbeck fluctuation of a periphery bank in the limit system:
/// d rho = -lambda rho dt + sigma1 dW, rho(0) = rho0.
struct OUSpec {
  double lambda = 1.0;
  double sigma1 = 0.2;
  double rho0 = 0.5;

  static OUSpec from(const NetworkParams& p) { return {p.lambda, p.sigma1, p.rho0}; }
};

struct OUMoments {
  double mean = 0.0;
  double variance = 0.0;
};

OUMoments ou_moments(const OUSpec& spec, double t);

/// One Euler-Maruyama step of the OU fluctuation; dW is the increment over dt.
double ou_euler_step(const OUSpec& spec, double x, double dt, double dW);

/// Gauss-Hermite rule for the weight exp(-x^2).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(std::size_t order);

enum class PhiMethod { quadrature, monte_carlo };
const char* to_string(PhiMethod m);
PhiMethod phi_method_from_string(const std::string& s);

struct PhiEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for quadrature
};

/// E[f(X) Y] for the centred OU pair X = rho(t - delta), Y = rho(t). For
/// t < delta the lag collapses and the pair is (rho(t), rho(t)).
/// The quadrature route uses E[f(X)Y] = exp(-lambda delta) E[X f(X)].
PhiEstimate phi(const OUSpec& spec, const FitnessFn& f, double t, double delta, PhiMethod method,
                std::size_t budget, PathKey key = {});

/// phi on every grid index 0..steps; index j uses the lagged form iff
/// j >= delay_steps.
struct PhiTable {
  double dt = 0.0;
  std::size_t delay_steps = 0;
  PhiMethod method = PhiMethod::quadrature;
  std::vector<double> values;
  std::vector<double> std_errors;
};

PhiTable build_phi_table(const OUSpec& spec, const FitnessFn& f, double dt, std::size_t steps,
                         std::size_t delay_steps, PhiMethod method, std::size_t budget,
                         PathKey key = {});

struct MeanFieldOptions {
  std::optional<std::size_t> stop_step;
  std::size_t stride = 0;
  std::size_t n_tracked = 1;
  std::optional<double> rho1_bubble_at_tau;  // counterfactual pairing
};

struct MeanFieldPath {
  double dt = 0.0;
  std::size_t m = 0;
  std::size_t n_tracked = 0;
  std::size_t steps = 0;
  std::optional<std::size_t> tau_index;
  std::optional<double> shock_ratio;
  std::vector<double> nu;             // full resolution
  std::vector<double> rho_bar_core_1; // full resolution
  std::vector<double> rho_tilde_1;    // full resolution
  std::vector<double> rho_bar_1;      // full resolution, rho_tilde_1 + nu
  /// Row-major rows of (t, nu, rho_bar_core_1..m, rho_tilde_1..k,
  /// rho_bar_1..k, beta, mu, M) with k = n_tracked.
  std::vector<double> trajectory;

  std::size_t row_width() const { return 2 + m + 2 * n_tracked + 3; }
};

/// Euler path of the limit system: the common drift process nu, the m core
/// banks and n_tracked OU fluctuations. Periphery limits are nu + rho_tilde.
/// The deterministic mean E of rho_tilde entering the drifts is that of the
/// discretised fluctuation, rho0 (1 - lambda dt)^j.
MeanFieldPath simulate_meanfield(const NetworkParams& p, const BubblePath& bubble,
                                 const PhiTable& phi, const Drivers& drivers, Scenario scenario,
                                 const MeanFieldOptions& opts = {});

}  // namespace bubblenet
