#include <filesystem>
#include <fstream>
#include <sstream>

#include "bubblenet/experiments.hpp"
#include "doctest.h"

using namespace bubblenet;

namespace {

Config small_config() {
  Config c = default_config();
  c.risk.paths = 60;
  c.grid.lambda_values = {0.5, 2.0};
  c.grid.delta_values = {0.0, 0.05};
  c.grid.scenarios = {ScenarioKind::bubble_finite, ScenarioKind::static_finite,
                      ScenarioKind::bubble_mf};
  c.convergence.n_values = {4, 8};
  c.convergence.paths = 20;
  c.convergence.horizon = 0.2;
  c.bubble.burst = BurstPolicy::deterministic(0.5);
  return c;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("risk table layout") {
  const Config c = small_config();
  const RiskTable t = risk_table(c, 1);
  CHECK(t.reports.size() == 2 * 2 + 2 * 1 + 2 * 2);
  REQUIRE(t.find(ScenarioKind::static_finite, 0.5, 0.05) != nullptr);
  CHECK(t.find(ScenarioKind::static_finite, 0.5, 0.05)->delta == 0.0);
  CHECK(t.find(ScenarioKind::bubble_finite, 1.0, 0.0) == nullptr);

  const auto csv = lines(render_risk_table_csv(t, c));
  REQUIRE(csv.size() == 1 + 1 + 6);
  CHECK(csv[0].rfind("# fingerprint=" + config_fingerprint(c) + " seed=", 0) == 0);
  CHECK(csv[1] == "scenario,lambda,delta=0,delta=0.05");
  CHECK(csv[4].rfind("static_finite,0.5,", 0) == 0);
  CHECK(csv[4].back() == ',');  // static rows fill only the first delay column

  const auto doc = nlohmann::json::parse(render_risk_reports_json(t, c));
  CHECK(doc["reports"].size() == t.reports.size());
  CHECK(doc["reports"][0].contains("excluded_by"));
  CHECK(doc["fingerprint"] == config_fingerprint(c));
}

TEST_CASE("experiment outputs do not depend on the worker count") {
  const Config c = small_config();
  CHECK(render_risk_table_csv(risk_table(c, 1), c) == render_risk_table_csv(risk_table(c, 3), c));
  CHECK(render_convergence_csv(convergence_study(c, 1), c) ==
        render_convergence_csv(convergence_study(c, 4), c));
  for (Scenario s : {Scenario::bubble, Scenario::counterfactual, Scenario::no_core_shock}) {
    const auto a = simulate_finite_paths(c, s, 9, 1);
    const auto b = simulate_finite_paths(c, s, 9, 2);
    CHECK(render_summaries_csv(a, c) == render_summaries_csv(b, c));
    CHECK(render_trajectory_csv(a, c) == render_trajectory_csv(b, c));
    const auto x = simulate_meanfield_paths(c, s, 9, 1);
    const auto y = simulate_meanfield_paths(c, s, 9, 3);
    CHECK(render_summaries_csv(x, c) == render_summaries_csv(y, c));
    CHECK(render_trajectory_csv(x, c) == render_trajectory_csv(y, c));
  }
}

TEST_CASE("convergence distances are nonnegative and vanish without noise") {
  Config c = small_config();
  for (const auto& r : convergence_study(c, 1)) {
    CHECK(r.periphery_distance >= 0.0);
    CHECK(r.core_distance >= 0.0);
    CHECK(r.total() == r.periphery_distance + r.core_distance);
  }
  c.network.sigma1 = c.network.sigma2 = 1e-300;
  c.bubble.sigma_bar = c.bubble.sigmaB = 1e-300;
  c.bubble.mu_bar = 0.0;
  for (const auto& r : convergence_study(c, 1)) {
    CHECK(r.periphery_distance < 10 * c.network.dt);
    CHECK(r.core_distance < 10 * c.network.dt);
  }
}

TEST_CASE("simulation summaries") {
  const Config c = small_config();
  const auto out = simulate_finite_paths(c, Scenario::bubble, 5, 1);
  REQUIRE(out.summaries.size() == 5);
  const auto csv = lines(render_summaries_csv(out, c));
  CHECK(csv[1] == "path,burst,tau,beta_tau,rho_tau,rho_tau_plus_Delta,loss");
  CHECK(csv.size() == 7);
  const auto traj = lines(render_trajectory_csv(out, c));
  CHECK(traj[1] == "t,rho_p_1,rho_p_2,rho_p_3,rho_p_4,rho_p_5,rho_p_6,rho_c_1,rho_c_2,A,beta,mu,M");
  CHECK(traj.size() == 2 + c.network.horizon_steps() / c.output.stride + 1);
  const auto mf = lines(render_trajectory_csv(simulate_meanfield_paths(c, Scenario::bubble, 2, 1), c));
  CHECK(mf[1] == "t,nu,rho_bar_core_1,rho_bar_core_2,rho_tilde_1,rho_bar_1,beta,mu,M");
}

TEST_CASE("atomic writes replace the target") {
  const auto dir = std::filesystem::temp_directory_path() / "bubblenet_write_test";
  std::filesystem::remove_all(dir);
  write_atomically(dir / "sub" / "a.csv", "one\n");
  write_atomically(dir / "sub" / "a.csv", "two\n");
  std::ifstream in(dir / "sub" / "a.csv");
  std::string s;
  std::getline(in, s);
  CHECK(s == "two");
  CHECK(!std::filesystem::exists(dir / "sub" / "a.csv.tmp"));
  std::filesystem::remove_all(dir);
}
