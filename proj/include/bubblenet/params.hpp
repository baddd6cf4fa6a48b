#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bubblenet {

/// Raised for invalid user input (configuration values, arguments).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a simulation reaches a state it cannot continue from.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Attachment weight a bank gives a counterparty as a function of that
/// counterparty's deviation from the average robustness.
struct FitnessFn {
  enum class Kind { arctan, constant };

  Kind kind = Kind::arctan;
  double level = 1.0;  // only read for Kind::constant

  static FitnessFn arctan() { return {Kind::arctan, 1.0}; }
  static FitnessFn constant(double c) { return {Kind::constant, c}; }

  // Unchecked hot-path evaluation.
  double operator()(double x) const noexcept;
};

double eval_fitness(const FitnessFn& f, double x);

/// x * f(x).
double eval_F(const FitnessFn& f, double x);

struct LipschitzEstimate {
  double K1 = 0.0;  // for f
  double K2 = 0.0;  // for x f(x)
};

/// Maximises the absolute difference quotients of f and F over all pairs of
/// an equispaced grid on [-halfwidth, halfwidth].
LipschitzEstimate estimate_lipschitz(const FitnessFn& f, double grid_halfwidth,
                                     std::size_t grid_points);

const char* to_string(FitnessFn::Kind kind);
FitnessFn::Kind fitness_kind_from_string(const std::string& s);

struct NetworkParams {
  int n = 6;  // periphery banks
  int m = 2;  // core banks
  double lambda = 1.0;
  double sigma1 = 0.2;
  double sigma2 = 0.2;
  double delta = 0.1;
  double rho0 = 0.5;
  std::vector<double> rho0_core{0.5, 0.5};  // one entry per core bank
  FitnessFn f_P = FitnessFn::arctan();
  FitnessFn f_B = FitnessFn::arctan();
  double dt = 1e-3;
  double horizon = 1.0;

  /// Number of grid steps spanned by the delay; valid only after validation.
  std::size_t delay_steps() const;
  /// Number of grid steps up to the horizon (rounded to the nearest step).
  std::size_t horizon_steps() const;
};

/// Returns p unchanged if every invariant holds, otherwise throws ConfigError
/// naming the first offending field.
NetworkParams validate_params(const NetworkParams& p);

/// Number of dt-steps in `duration`; throws "<what> not multiple of dt"
/// unless duration is an integer multiple of dt.
std::size_t steps_on_grid(double duration, double dt, const char* what);

}  // namespace bubblenet
