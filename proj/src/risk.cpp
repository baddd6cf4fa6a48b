#include "bubblenet/risk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bubblenet/finite_net.hpp"

namespace bubblenet {

const char* to_string(Exclusion e) {
  switch (e) {
    case Exclusion::none: return "none";
    case Exclusion::no_burst: return "no_burst";
    case Exclusion::beyond_horizon: return "beyond_horizon";
    case Exclusion::degenerate_denominator: return "degenerate_denominator";
    case Exclusion::degenerate_ratio: return "degenerate_ratio";
    case Exclusion::count_: break;
  }
  return "?";
}

ShockResult relative_shock(std::span<const double> series, std::size_t tau_index,
                           std::size_t window_steps, double dt, double floor,
                           std::uint32_t path_id) {
  if (tau_index + window_steps >= series.size()) return {std::nullopt, Exclusion::beyond_horizon};
  const double before = series[tau_index];
  const double after = series[tau_index + window_steps];
  if (!(std::abs(before) >= floor)) return {std::nullopt, Exclusion::degenerate_denominator};
  const double loss = (after - before) / before;
  if (!std::isfinite(loss)) return {std::nullopt, Exclusion::degenerate_denominator};
  return {LossSample{static_cast<double>(tau_index) * dt, loss, path_id}, Exclusion::none};
}

double risk_alpha(std::span<const double> losses, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("risk_alpha: alpha must lie in (0, 1)");
  if (losses.empty()) throw ConfigError("risk_alpha: empty sample set");
  const std::size_t N = losses.size();
  const auto min_samples = static_cast<std::size_t>(std::ceil(1.0 / alpha - 1e-9));
  if (N < min_samples)
    throw ConfigError("risk_alpha: need at least " + std::to_string(min_samples) + " samples");

  std::vector<double> sorted(losses.begin(), losses.end());
  std::sort(sorted.begin(), sorted.end());

  // Largest count c with c / N <= alpha. The sublevel set {x : F(x) <= alpha}
  // is then (-inf, L_(c+1)), so its supremum is the (c+1)-th order statistic.
  const double Nd = static_cast<double>(N);
  auto count = static_cast<std::size_t>(std::floor(alpha * Nd));
  while (count > 0 && static_cast<double>(count) / Nd > alpha) --count;
  while (count + 1 < N && static_cast<double>(count + 1) / Nd <= alpha) ++count;
  return -sorted[count];
}

double risk_alpha(std::span<const LossSample> samples, double alpha) {
  std::vector<double> losses;
  losses.reserve(samples.size());
  for (const auto& s : samples) losses.push_back(s.loss);
  return risk_alpha(losses, alpha);
}

const char* to_string(ScenarioKind s) {
  switch (s) {
    case ScenarioKind::bubble_finite: return "bubble_finite";
    case ScenarioKind::counterfactual_finite: return "counterfactual_finite";
    case ScenarioKind::static_finite: return "static_finite";
    case ScenarioKind::bubble_mf: return "bubble_mf";
    case ScenarioKind::counterfactual_mf: return "counterfactual_mf";
    case ScenarioKind::static_mf: return "static_mf";
  }
  return "?";
}

ScenarioKind scenario_from_string(const std::string& s) {
  for (auto k : {ScenarioKind::bubble_finite, ScenarioKind::counterfactual_finite,
                 ScenarioKind::static_finite, ScenarioKind::bubble_mf,
                 ScenarioKind::counterfactual_mf, ScenarioKind::static_mf})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown scenario '" + s + "'");
}

bool is_meanfield(ScenarioKind s) {
  return s == ScenarioKind::bubble_mf || s == ScenarioKind::counterfactual_mf ||
         s == ScenarioKind::static_mf;
}

bool is_static(ScenarioKind s) {
  return s == ScenarioKind::static_finite || s == ScenarioKind::static_mf;
}

namespace {

struct PathOutcome {
  std::optional<LossSample> sample;
  Exclusion reason = Exclusion::none;
};

// Monitored robustness series of periphery bank 1.
const std::vector<double>& monitored(const PathHistory& run) { return run.rho_periphery_1; }
const std::vector<double>& monitored(const MeanFieldPath& run) { return run.rho_bar_1; }

}  // namespace

ScenarioResult run_scenario(ScenarioKind scenario, NetworkParams p, const BubbleParams& b,
                            const RiskSettings& settings, const PhiSettings& phi_settings,
                            std::uint64_t seed, std::uint32_t cell, unsigned workers) {
  if (is_static(scenario)) {
    p.f_P = FitnessFn::constant(1.0);
    p.f_B = FitnessFn::constant(1.0);
  }
  validate_params(p);
  validate_bubble(b, p.horizon, p.dt);
  if (!(settings.Delta > 0.0)) throw ConfigError("risk.Delta must be > 0");
  if (settings.paths == 0) throw ConfigError("risk.paths must be > 0");

  const std::size_t horizon_steps = p.horizon_steps();
  const std::size_t window = steps_on_grid(settings.Delta, p.dt, "risk.Delta");
  const bool mf = is_meanfield(scenario);
  const bool counterfactual = scenario == ScenarioKind::counterfactual_finite ||
                              scenario == ScenarioKind::counterfactual_mf;

  PhiTable phi_table;
  if (mf)
    phi_table = build_phi_table(OUSpec::from(p), p.f_P, p.dt, horizon_steps, p.delay_steps(),
                                phi_settings.method, phi_settings.budget,
                                PathKey{seed, cell | 0x80000000u, 0});

  std::vector<PathOutcome> outcomes(settings.paths);
  auto run_path = [&](std::size_t idx) {
    const auto path_id = static_cast<std::uint32_t>(idx);
    const Drivers drivers = Drivers::standard(PathKey{seed, cell, path_id},
                                              static_cast<std::size_t>(p.n),
                                              static_cast<std::size_t>(p.m));
    const BubblePath bubble = simulate_bubble(b, p.dt, horizon_steps,
                                              NormalStream(drivers.key, drivers.b1),
                                              NormalStream(drivers.key, drivers.b3), window);
    if (!bubble.tau_index) {
      outcomes[idx] = {std::nullopt, Exclusion::no_burst};
      return;
    }
    const std::size_t tau = *bubble.tau_index;
    if (tau + window > horizon_steps) {
      outcomes[idx] = {std::nullopt, Exclusion::beyond_horizon};
      return;
    }
    const std::size_t stop = tau + window;

    auto evaluate = [&](const auto& simulate) {
      std::optional<double> rho1_bubble;
      if (counterfactual) {
        const auto paired = simulate(Scenario::bubble, tau, std::nullopt);
        const double r = monitored(paired)[tau];
        if (!(std::abs(r) >= settings.denominator_floor))
          return PathOutcome{std::nullopt, Exclusion::degenerate_ratio};
        rho1_bubble = r;
      }
      const auto run = simulate(counterfactual ? Scenario::counterfactual : Scenario::bubble,
                                stop, rho1_bubble);
      const auto& series = monitored(run);
      const ShockResult res = relative_shock(series, tau, window, p.dt,
                                             settings.denominator_floor, path_id);
      return PathOutcome{res.sample, res.reason};
    };

    if (mf) {
      outcomes[idx] = evaluate([&](Scenario sc, std::size_t stop_at, std::optional<double> r1) {
        MeanFieldOptions o;
        o.stop_step = stop_at;
        o.rho1_bubble_at_tau = r1;
        return simulate_meanfield(p, bubble, phi_table, drivers, sc, o);
      });
    } else {
      outcomes[idx] = evaluate([&](Scenario sc, std::size_t stop_at, std::optional<double> r1) {
        FiniteRunOptions o;
        o.stop_step = stop_at;
        o.rho1_bubble_at_tau = r1;
        return simulate_finite(p, bubble, drivers, sc, o);
      });
    }
  };
  parallel_for(settings.paths, workers, run_path);

  ScenarioResult result;
  RiskReport& rep = result.report;
  rep.scenario = to_string(scenario);
  rep.alpha = settings.alpha;
  rep.Delta = settings.Delta;
  rep.lambda = p.lambda;
  rep.delta = p.delta;
  rep.n = p.n;
  rep.m = p.m;
  rep.N_s = settings.paths;
  rep.seed = seed;
  rep.cell = cell;
  for (const auto& o : outcomes) {
    if (o.sample) {
      result.samples.push_back(*o.sample);
    } else {
      ++rep.excluded;
      ++rep.excluded_by[static_cast<std::size_t>(o.reason)];
    }
  }
  rep.included = result.samples.size();

  const double rate = static_cast<double>(rep.excluded) / static_cast<double>(rep.N_s);
  if (rate > settings.max_exclusion) {
    std::ostringstream msg;
    msg << rep.scenario << " (lambda=" << p.lambda << ", delta=" << p.delta << "): excluded "
        << rep.excluded << " of " << rep.N_s << " paths [";
    for (std::size_t r = 1; r < rep.excluded_by.size(); ++r)
      msg << (r > 1 ? ", " : "") << to_string(static_cast<Exclusion>(r)) << "=" << rep.excluded_by[r];
    msg << "], ceiling " << settings.max_exclusion;
    throw ExperimentError(msg.str());
  }
  const auto needed = static_cast<std::size_t>(std::ceil(1.0 / settings.alpha - 1e-9));
  if (rep.included < needed) {
    std::ostringstream msg;
    msg << rep.scenario << " (lambda=" << p.lambda << ", delta=" << p.delta << "): only "
        << rep.included << " usable paths, at least " << needed << " needed for alpha "
        << settings.alpha;
    throw ExperimentError(msg.str());
  }
  rep.risk = risk_alpha(std::span<const LossSample>(result.samples), settings.alpha);
  return result;
}

}  // namespace bubblenet
