#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "bubblenet/config.hpp"
#include "bubblenet/experiments.hpp"
#include "bubblenet/meanfield.hpp"

namespace fs = std::filesystem;
using namespace bubblenet;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  unsigned workers = 1;
  std::optional<std::size_t> paths;
  std::string format = "csv";
  std::string scenario = "bubble";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "Master seed (overrides config)");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--paths", o.paths, "Number of Monte Carlo paths (overrides config)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

Config resolve(const CommonOptions& o, bool paths_to_risk, bool paths_to_convergence) {
  Config c = o.config_path.empty() ? default_config() : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.paths && paths_to_risk) c.risk.paths = *o.paths;
  if (o.paths && paths_to_convergence) c.convergence.paths = *o.paths;
  validate_config(c);
  return c;
}

Scenario parse_path_scenario(const std::string& s) {
  if (s == "bubble") return Scenario::bubble;
  if (s == "counterfactual") return Scenario::counterfactual;
  if (s == "no_core_shock") return Scenario::no_core_shock;
  throw ConfigError("unknown --scenario '" + s + "'");
}

void emit(const fs::path& dir, const std::string& name, const std::string& content) {
  write_atomically(dir / name, content);
  std::cout << "wrote " << (dir / name).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed core-periphery bank network under an asset bubble"};
  app.require_subcommand(1);

  CommonOptions o;
  auto* sim_fin = app.add_subcommand("simulate-finite", "Simulate the finite network");
  auto* sim_mf = app.add_subcommand("simulate-meanfield", "Simulate the mean-field limit");
  auto* table = app.add_subcommand("risk-table", "Burst risk over the (lambda, delta) grid");
  auto* conv = app.add_subcommand("convergence", "Finite-to-limit distance as n grows");
  auto* phi_cmd = app.add_subcommand("phi-table", "Tabulate the phi kernel on the time grid");
  auto* check = app.add_subcommand("validate-config", "Validate and print the resolved config");
  for (auto* cmd : {sim_fin, sim_mf, table, conv, phi_cmd, check}) add_common(cmd, o);
  for (auto* cmd : {sim_fin, sim_mf})
    cmd->add_option("--scenario", o.scenario, "bubble | counterfactual | no_core_shock")
        ->check(CLI::IsMember({"bubble", "counterfactual", "no_core_shock"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  Config cfg;
  try {
    cfg = resolve(o, table->parsed(), conv->parsed());
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path out = o.out_dir;
  try {
    if (check->parsed()) {
      std::cout << to_json(cfg).dump(2) << "\n";
      std::cout << "fingerprint " << config_fingerprint(cfg) << "\n";
    } else if (sim_fin->parsed() || sim_mf->parsed()) {
      const Scenario sc = parse_path_scenario(o.scenario);
      const std::size_t paths = o.paths.value_or(1);
      const bool mf = sim_mf->parsed();
      const SimulationOutput res = mf ? simulate_meanfield_paths(cfg, sc, paths, o.workers)
                                      : simulate_finite_paths(cfg, sc, paths, o.workers);
      const std::string stem = mf ? "meanfield" : "finite";
      emit(out, stem + "_summary.csv", render_summaries_csv(res, cfg));
      emit(out, stem + "_trajectory.csv", render_trajectory_csv(res, cfg));
    } else if (table->parsed()) {
      const RiskTable t = risk_table(cfg, o.workers);
      if (o.format == "json")
        emit(out, "risk_reports.json", render_risk_reports_json(t, cfg));
      else
        emit(out, "risk_table.csv", render_risk_table_csv(t, cfg));
    } else if (conv->parsed()) {
      emit(out, "convergence.csv", render_convergence_csv(convergence_study(cfg, o.workers), cfg));
    } else if (phi_cmd->parsed()) {
      const NetworkParams& p = cfg.network;
      const PhiTable phi = build_phi_table(OUSpec::from(p), p.f_P, p.dt, p.horizon_steps(),
                                           p.delay_steps(), cfg.phi.method, cfg.phi.budget,
                                           PathKey{cfg.seed, 0xB0000000u, 0});
      emit(out, "phi_table.csv", render_phi_csv(phi, cfg));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
