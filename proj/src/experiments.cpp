#include "bubblenet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bubblenet/finite_net.hpp"
#include "bubblenet/meanfield.hpp"

namespace bubblenet {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string preamble(const Config& c) {
  return "# fingerprint=" + config_fingerprint(c) + " seed=" + std::to_string(c.seed) + "\n";
}

constexpr std::uint32_t kConvergenceCell = 0xC0u << 24;
constexpr std::uint32_t kSimulationCell = 0xA0u << 24;
// Every risk-table cell draws from the same streams so that differences
// across scenarios, lambda and delta are not masked by sampling noise.
constexpr std::uint32_t kRiskTableCell = 0xD0u << 24;

}  // namespace

const RiskReport* RiskTable::find(ScenarioKind s, double lambda, double delta) const {
  for (const auto& r : reports)
    if (r.scenario == to_string(s) && r.lambda == lambda && (is_static(s) || r.delta == delta))
      return &r;
  return nullptr;
}

RiskTable risk_table(const Config& c, unsigned workers) {
  validate_config(c);
  RiskTable table;
  table.lambda_values = c.grid.lambda_values;
  table.delta_values = c.grid.delta_values;
  const std::string fp = config_fingerprint(c);

  for (ScenarioKind s : c.grid.scenarios) {
    for (std::size_t li = 0; li < c.grid.lambda_values.size(); ++li) {
      const std::size_t n_delta = is_static(s) ? 1 : c.grid.delta_values.size();
      for (std::size_t di = 0; di < n_delta; ++di) {
        NetworkParams p = c.network;
        p.lambda = c.grid.lambda_values[li];
        p.delta = is_static(s) ? 0.0 : c.grid.delta_values[di];
        const std::uint32_t cell = kRiskTableCell;
        ScenarioResult res;
        try {
          res = run_scenario(s, p, c.bubble, c.risk, c.phi, c.seed, cell, workers);
        } catch (const std::exception& e) {
          std::ostringstream msg;
          msg << "risk table cell (" << to_string(s) << ", lambda=" << p.lambda
              << ", delta=" << p.delta << ") failed: " << e.what();
          throw ExperimentError(msg.str());
        }
        res.report.fingerprint = fp;
        table.reports.push_back(res.report);
      }
    }
  }
  return table;
}

std::vector<ConvergenceRow> convergence_study(const Config& c, unsigned workers) {
  validate_config(c);
  std::vector<ConvergenceRow> rows;
  for (int n : c.convergence.n_values) {
    NetworkParams p = c.network;
    p.n = n;
    p.horizon = c.convergence.horizon;
    validate_params(p);
    const std::size_t steps = p.horizon_steps();
    const PhiTable phi = build_phi_table(OUSpec::from(p), p.f_P, p.dt, steps, p.delay_steps(),
                                         c.phi.method, c.phi.budget,
                                         PathKey{c.seed, kConvergenceCell | 0x800000u, 0});

    std::vector<double> sup_p(c.convergence.paths), sup_c(c.convergence.paths);
    parallel_for(c.convergence.paths, workers, [&](std::size_t idx) {
      const Drivers drivers =
          Drivers::standard(PathKey{c.seed, kConvergenceCell, static_cast<std::uint32_t>(idx)},
                            static_cast<std::size_t>(n), static_cast<std::size_t>(p.m));
      const BubblePath bubble = simulate_bubble(c.bubble, p.dt, steps,
                                                NormalStream(drivers.key, drivers.b1),
                                                NormalStream(drivers.key, drivers.b3));
      const PathHistory fin = simulate_finite(p, bubble, drivers, Scenario::bubble);
      const MeanFieldPath lim = simulate_meanfield(p, bubble, phi, drivers, Scenario::bubble);
      double dp = 0.0, dc = 0.0;
      for (std::size_t j = 0; j <= steps; ++j) {
        dp = std::max(dp, std::abs(fin.rho_periphery_1[j] - lim.rho_bar_1[j]));
        dc = std::max(dc, std::abs(fin.rho_core_1[j] - lim.rho_bar_core_1[j]));
      }
      sup_p[idx] = dp;
      sup_c[idx] = dc;
    });

    auto mean_se = [](const std::vector<double>& v) {
      const double N = static_cast<double>(v.size());
      double s = 0.0, s2 = 0.0;
      for (double x : v) {
        s += x;
        s2 += x * x;
      }
      const double mean = s / N;
      const double var = v.size() > 1 ? std::max(0.0, (s2 - N * mean * mean) / (N - 1.0)) : 0.0;
      return std::pair{mean, std::sqrt(var / N)};
    };
    ConvergenceRow row;
    row.n = n;
    row.paths = c.convergence.paths;
    std::tie(row.periphery_distance, row.periphery_se) = mean_se(sup_p);
    std::tie(row.core_distance, row.core_se) = mean_se(sup_c);
    rows.push_back(row);
  }
  return rows;
}

namespace {

template <class Simulate, class Series>
SimulationOutput simulate_paths(const Config& c, Scenario scenario, std::size_t paths,
                                unsigned workers, Simulate&& simulate, Series&& monitored) {
  const NetworkParams& p = c.network;
  const std::size_t steps = p.horizon_steps();
  const std::size_t window = steps_on_grid(c.risk.Delta, p.dt, "risk.Delta");
  SimulationOutput out;
  out.summaries.resize(paths);
  std::vector<double> first_trajectory;

  parallel_for(paths, workers, [&](std::size_t idx) {
    const auto path_id = static_cast<std::uint32_t>(idx);
    const Drivers drivers = Drivers::standard(PathKey{c.seed, kSimulationCell, path_id},
                                              static_cast<std::size_t>(p.n),
                                              static_cast<std::size_t>(p.m));
    const BubblePath bubble = simulate_bubble(c.bubble, p.dt, steps,
                                              NormalStream(drivers.key, drivers.b1),
                                              NormalStream(drivers.key, drivers.b3));
    std::optional<double> rho1_bubble;
    if (scenario == Scenario::counterfactual && bubble.tau_index) {
      const auto paired = simulate(bubble, drivers, Scenario::bubble, *bubble.tau_index,
                                   std::nullopt, std::size_t{0});
      rho1_bubble = monitored(paired)[*bubble.tau_index];
    }
    const auto run = simulate(bubble, drivers, scenario, steps, rho1_bubble,
                              idx == 0 ? std::max<std::size_t>(1, c.output.stride) : 0);
    const auto& series = monitored(run);

    PathSummary s;
    s.path = path_id;
    if (bubble.tau_index) {
      const std::size_t tau = *bubble.tau_index;
      s.burst = true;
      s.tau = static_cast<double>(tau) * p.dt;
      s.beta_tau = bubble.beta[tau];
      s.rho_tau = series[tau];
      s.window_inside = tau + window <= steps;
      if (s.window_inside) s.rho_tau_Delta = series[tau + window];
    }
    out.summaries[idx] = s;
    if (idx == 0) first_trajectory = run.trajectory;
  });
  out.trajectory = std::move(first_trajectory);
  return out;
}

}  // namespace

SimulationOutput simulate_finite_paths(const Config& c, Scenario scenario, std::size_t paths,
                                       unsigned workers) {
  validate_config(c);
  const NetworkParams& p = c.network;
  auto out = simulate_paths(
      c, scenario, paths, workers,
      [&](const BubblePath& bubble, const Drivers& d, Scenario sc, std::size_t stop,
          std::optional<double> r1, std::size_t stride) {
        FiniteRunOptions o;
        o.stop_step = stop;
        o.rho1_bubble_at_tau = r1;
        o.stride = stride;
        return simulate_finite(p, bubble, d, sc, o);
      },
      [](const PathHistory& h) -> const std::vector<double>& { return h.rho_periphery_1; });
  out.trajectory_header.push_back("t");
  for (int i = 1; i <= p.n; ++i) out.trajectory_header.push_back("rho_p_" + std::to_string(i));
  for (int k = 1; k <= p.m; ++k) out.trajectory_header.push_back("rho_c_" + std::to_string(k));
  for (const char* h : {"A", "beta", "mu", "M"}) out.trajectory_header.emplace_back(h);
  return out;
}

SimulationOutput simulate_meanfield_paths(const Config& c, Scenario scenario, std::size_t paths,
                                          unsigned workers) {
  validate_config(c);
  const NetworkParams& p = c.network;
  const std::size_t steps = p.horizon_steps();
  const PhiTable phi = build_phi_table(OUSpec::from(p), p.f_P, p.dt, steps, p.delay_steps(),
                                       c.phi.method, c.phi.budget,
                                       PathKey{c.seed, kSimulationCell | 0x800000u, 0});
  auto out = simulate_paths(
      c, scenario, paths, workers,
      [&](const BubblePath& bubble, const Drivers& d, Scenario sc, std::size_t stop,
          std::optional<double> r1, std::size_t stride) {
        MeanFieldOptions o;
        o.stop_step = stop;
        o.rho1_bubble_at_tau = r1;
        o.stride = stride;
        return simulate_meanfield(p, bubble, phi, d, sc, o);
      },
      [](const MeanFieldPath& h) -> const std::vector<double>& { return h.rho_bar_1; });
  out.trajectory_header = {"t", "nu"};
  for (int k = 1; k <= p.m; ++k) out.trajectory_header.push_back("rho_bar_core_" + std::to_string(k));
  out.trajectory_header.push_back("rho_tilde_1");
  out.trajectory_header.push_back("rho_bar_1");
  for (const char* h : {"beta", "mu", "M"}) out.trajectory_header.emplace_back(h);
  return out;
}

std::string render_risk_table_csv(const RiskTable& t, const Config& c) {
  std::ostringstream os;
  os << preamble(c);
  os << "scenario,lambda";
  for (double d : t.delta_values) os << ",delta=" << num(d);
  os << "\n";
  for (ScenarioKind s : c.grid.scenarios) {
    for (double lambda : t.lambda_values) {
      os << to_string(s) << "," << num(lambda);
      for (std::size_t di = 0; di < t.delta_values.size(); ++di) {
        os << ",";
        if (is_static(s) && di > 0) continue;
        if (const RiskReport* r = t.find(s, lambda, t.delta_values[di])) os << num(r->risk);
      }
      os << "\n";
    }
  }
  return os.str();
}

nlohmann::json to_json(const RiskReport& r) {
  nlohmann::json excl = nlohmann::json::object();
  for (std::size_t i = 1; i < r.excluded_by.size(); ++i)
    excl[to_string(static_cast<Exclusion>(i))] = r.excluded_by[i];
  return {{"scenario", r.scenario}, {"alpha", r.alpha},       {"Delta", r.Delta},
          {"delta", r.delta},       {"lambda", r.lambda},     {"n", r.n},
          {"m", r.m},               {"N_s", r.N_s},           {"included", r.included},
          {"excluded", r.excluded}, {"excluded_by", excl},    {"risk", r.risk},
          {"seed", r.seed},         {"cell", r.cell},         {"fingerprint", r.fingerprint}};
}

std::string render_risk_reports_json(const RiskTable& t, const Config& c) {
  nlohmann::json doc;
  doc["fingerprint"] = config_fingerprint(c);
  doc["seed"] = c.seed;
  doc["reports"] = nlohmann::json::array();
  for (const auto& r : t.reports) doc["reports"].push_back(to_json(r));
  return doc.dump(2) + "\n";
}

std::string render_convergence_csv(const std::vector<ConvergenceRow>& rows, const Config& c) {
  std::ostringstream os;
  os << preamble(c);
  os << "n,paths,periphery_distance,periphery_se,core_distance,core_se,total\n";
  for (const auto& r : rows)
    os << r.n << "," << r.paths << "," << num(r.periphery_distance) << "," << num(r.periphery_se)
       << "," << num(r.core_distance) << "," << num(r.core_se) << "," << num(r.total()) << "\n";
  return os.str();
}

std::string render_phi_csv(const PhiTable& phi, const Config& c) {
  std::ostringstream os;
  os << preamble(c);
  os << "t,phi,std_error\n";
  for (std::size_t j = 0; j < phi.values.size(); ++j)
    os << num(static_cast<double>(j) * phi.dt) << "," << num(phi.values[j]) << ","
       << num(phi.std_errors[j]) << "\n";
  return os.str();
}

std::string render_summaries_csv(const SimulationOutput& out, const Config& c) {
  std::ostringstream os;
  os << preamble(c);
  os << "path,burst,tau,beta_tau,rho_tau,rho_tau_plus_Delta,loss\n";
  for (const auto& s : out.summaries) {
    os << s.path << "," << (s.burst ? 1 : 0) << ",";
    if (s.burst) {
      os << num(s.tau) << "," << num(s.beta_tau) << "," << num(s.rho_tau) << ",";
      if (s.window_inside) {
        os << num(s.rho_tau_Delta) << ",";
        if (s.rho_tau != 0.0) os << num((s.rho_tau_Delta - s.rho_tau) / s.rho_tau);
      } else {
        os << ",";
      }
    } else {
      os << ",,,,";
    }
    os << "\n";
  }
  return os.str();
}

std::string render_trajectory_csv(const SimulationOutput& out, const Config& c) {
  std::ostringstream os;
  os << preamble(c);
  for (std::size_t i = 0; i < out.trajectory_header.size(); ++i)
    os << (i ? "," : "") << out.trajectory_header[i];
  os << "\n";
  const std::size_t w = out.trajectory_header.size();
  for (std::size_t r = 0; w > 0 && r + w <= out.trajectory.size(); r += w) {
    for (std::size_t i = 0; i < w; ++i) os << (i ? "," : "") << num(out.trajectory[r + i]);
    os << "\n";
  }
  return os.str();
}

void write_atomically(const std::filesystem::path& target, const std::string& content) {
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace bubblenet
