#include "bubblenet/params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bubblenet {

double FitnessFn::operator()(double x) const noexcept {
  if (kind == Kind::constant) return level;
  return 1.0 + 2.0 * std::atan(x) / std::numbers::pi;
}

double eval_fitness(const FitnessFn& f, double x) {
  if (!std::isfinite(x)) throw ConfigError("eval_fitness: argument must be finite");
  return f(x);
}

double eval_F(const FitnessFn& f, double x) { return x * eval_fitness(f, x); }

LipschitzEstimate estimate_lipschitz(const FitnessFn& f, double grid_halfwidth,
                                     std::size_t grid_points) {
  if (grid_points < 3) throw ConfigError("estimate_lipschitz: grid_points must be >= 3");
  if (!(grid_halfwidth > 0.0) || !std::isfinite(grid_halfwidth))
    throw ConfigError("estimate_lipschitz: grid_halfwidth must be positive");

  std::vector<double> xs(grid_points), fx(grid_points), Fx(grid_points);
  const double h = 2.0 * grid_halfwidth / static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < grid_points; ++i) {
    xs[i] = -grid_halfwidth + h * static_cast<double>(i);
    fx[i] = f(xs[i]);
    Fx[i] = xs[i] * fx[i];
  }

  LipschitzEstimate est;
  double sup_f = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    sup_f = std::max(sup_f, std::abs(fx[i]));
    for (std::size_t j = i + 1; j < grid_points; ++j) {
      const double dx = xs[j] - xs[i];
      est.K1 = std::max(est.K1, std::abs(fx[j] - fx[i]) / dx);
      est.K2 = std::max(est.K2, std::abs(Fx[j] - Fx[i]) / dx);
    }
  }
  // |x f(x)| <= K2 |x| forces sup |f| <= K2.
  est.K2 = std::max(est.K2, sup_f);
  return est;
}

const char* to_string(FitnessFn::Kind kind) {
  return kind == FitnessFn::Kind::arctan ? "arctan" : "constant";
}

FitnessFn::Kind fitness_kind_from_string(const std::string& s) {
  if (s == "arctan") return FitnessFn::Kind::arctan;
  if (s == "constant") return FitnessFn::Kind::constant;
  throw ConfigError("unknown fitness kind '" + s + "' (expected arctan or constant)");
}

std::size_t steps_on_grid(double duration, double dt, const char* what) {
  if (duration == 0.0) return 0;
  const double ratio = duration / dt;
  const double k = std::round(ratio);
  if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError(std::string(what) + " not multiple of dt");
  return static_cast<std::size_t>(k);
}

std::size_t NetworkParams::delay_steps() const { return steps_on_grid(delta, dt, "delta"); }

std::size_t NetworkParams::horizon_steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check_fitness(const FitnessFn& f, const char* field) {
  if (f.kind == FitnessFn::Kind::constant)
    require(std::isfinite(f.level) && f.level >= 0.0,
            std::string(field) + ".level must be finite and >= 0");
}

}  // namespace

NetworkParams validate_params(const NetworkParams& p) {
  require(p.n >= 2, "n must be >= 2");
  require(p.m >= 2, "m must be >= 2");
  require(std::isfinite(p.lambda) && p.lambda > 0.0, "lambda must be > 0");
  require(std::isfinite(p.sigma1) && p.sigma1 > 0.0, "sigma1 must be > 0");
  require(std::isfinite(p.sigma2) && p.sigma2 > 0.0, "sigma2 must be > 0");
  require(std::isfinite(p.delta) && p.delta >= 0.0, "delta must be >= 0");
  require(std::isfinite(p.rho0) && p.rho0 > 0.0, "rho0 must be > 0");
  require(p.rho0_core.size() == static_cast<std::size_t>(p.m),
          "rho0_core must have exactly m entries");
  for (double r : p.rho0_core) require(std::isfinite(r), "rho0_core entries must be finite");
  require(std::isfinite(p.dt) && p.dt > 0.0, "dt must be > 0");
  require(std::isfinite(p.horizon) && p.horizon >= p.delta, "horizon must be >= delta");
  require(p.horizon > 0.0, "horizon must be > 0");
  check_fitness(p.f_P, "fitness.periphery");
  check_fitness(p.f_B, "fitness.core");
  steps_on_grid(p.delta, p.dt, "delta");
  return p;
}

}  // namespace bubblenet
