#include "bubblenet/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace bubblenet {

using nlohmann::json;

Config default_config() {
  Config c;
  // Bubble and burst values are tuned, not taken from data: a fast bubble that
  // bursts well inside the horizon on almost every path.
  c.network.horizon = 2.0;
  c.bubble.k = 21.4915;
  c.bubble.mu_bar = 1.1942;
  c.bubble.sigma_bar = 1.1683;
  c.bubble.Lambda = 1.0;
  c.bubble.sigmaB = 0.2;
  c.bubble.M0 = 1.0;
  c.bubble.muM = 2.0;
  c.bubble.sigmaM = 0.2;
  c.bubble.vol_mode = BubbleParams::VolMode::state_dependent;
  c.bubble.burst = BurstPolicy::drawdown(0.02, 0.2013);
  return c;
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "n", "m", "lambda", "sigma1", "sigma2", "delta", "rho0", "rho0_core", "dt", "horizon",
      "fitness.periphery.kind", "fitness.periphery.level", "fitness.core.kind",
      "fitness.core.level", "bubble.k", "bubble.mu_bar", "bubble.sigma_bar", "bubble.Lambda",
      "bubble.sigmaB", "bubble.vol_mode", "bubble.M0", "bubble.muM", "bubble.sigmaM",
      "burst.kind", "burst.t", "burst.q", "burst.beta_star", "risk.alpha", "risk.Delta",
      "risk.paths", "risk.denominator_floor", "risk.max_exclusion", "phi.method", "phi.budget",
      "grid.lambda_values", "grid.delta_values", "grid.scenarios", "convergence.n_values",
      "convergence.paths", "convergence.horizon", "output.stride", "seed"};
  return keys;
}

namespace {

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (node.is_object() && (prefix.empty() || !node.empty())) {
    for (const auto& [key, value] : node.items())
      flatten(value, prefix.empty() ? key : prefix + "." + key, out);
    return;
  }
  out[prefix] = node;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, json> flat) : flat_(std::move(flat)) {}

  template <class T>
  void get(const std::string& key, T& dst) {
    auto it = flat_.find(key);
    if (it == flat_.end()) return;
    try {
      dst = it->second.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }

  bool has(const std::string& key) const { return flat_.count(key) > 0; }
  const json& raw(const std::string& key) const { return flat_.at(key); }

 private:
  std::map<std::string, json> flat_;
};

void read_fitness(Reader& r, const std::string& prefix, FitnessFn& f) {
  std::string kind = to_string(f.kind);
  r.get(prefix + ".kind", kind);
  f.kind = fitness_kind_from_string(kind);
  r.get(prefix + ".level", f.level);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

Config config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  std::map<std::string, json> flat;
  flatten(doc, "", flat);

  const auto& known = known_config_keys();
  std::vector<std::string> unknown;
  for (const auto& [key, _] : flat)
    if (std::find(known.begin(), known.end(), key) == known.end()) unknown.push_back(key);
  if (!unknown.empty()) {
    std::string msg = "unknown config key(s):";
    for (const auto& k : unknown) msg += " '" + k + "'";
    throw ConfigError(msg);
  }

  Config c = default_config();
  Reader r(std::move(flat));
  auto& p = c.network;
  r.get("n", p.n);
  r.get("m", p.m);
  r.get("lambda", p.lambda);
  r.get("sigma1", p.sigma1);
  r.get("sigma2", p.sigma2);
  r.get("delta", p.delta);
  r.get("rho0", p.rho0);
  r.get("dt", p.dt);
  r.get("horizon", p.horizon);
  if (r.has("rho0_core")) {
    const json& v = r.raw("rho0_core");
    if (v.is_number()) {
      p.rho0_core.assign(static_cast<std::size_t>(std::max(p.m, 0)), v.get<double>());
    } else {
      r.get("rho0_core", p.rho0_core);
    }
  } else {
    p.rho0_core.assign(static_cast<std::size_t>(std::max(p.m, 0)), p.rho0);
  }
  read_fitness(r, "fitness.periphery", p.f_P);
  read_fitness(r, "fitness.core", p.f_B);

  auto& b = c.bubble;
  r.get("bubble.k", b.k);
  r.get("bubble.mu_bar", b.mu_bar);
  r.get("bubble.sigma_bar", b.sigma_bar);
  r.get("bubble.Lambda", b.Lambda);
  r.get("bubble.sigmaB", b.sigmaB);
  r.get("bubble.M0", b.M0);
  r.get("bubble.muM", b.muM);
  r.get("bubble.sigmaM", b.sigmaM);
  std::string vol = to_string(b.vol_mode);
  r.get("bubble.vol_mode", vol);
  b.vol_mode = vol_mode_from_string(vol);
  std::string burst = to_string(b.burst.kind);
  r.get("burst.kind", burst);
  b.burst.kind = burst_kind_from_string(burst);
  r.get("burst.t", b.burst.t_burst);
  r.get("burst.q", b.burst.q);
  r.get("burst.beta_star", b.burst.beta_star);

  r.get("risk.alpha", c.risk.alpha);
  r.get("risk.Delta", c.risk.Delta);
  r.get("risk.paths", c.risk.paths);
  r.get("risk.denominator_floor", c.risk.denominator_floor);
  r.get("risk.max_exclusion", c.risk.max_exclusion);

  std::string method = to_string(c.phi.method);
  r.get("phi.method", method);
  c.phi.method = phi_method_from_string(method);
  r.get("phi.budget", c.phi.budget);

  r.get("grid.lambda_values", c.grid.lambda_values);
  r.get("grid.delta_values", c.grid.delta_values);
  if (r.has("grid.scenarios")) {
    std::vector<std::string> names;
    r.get("grid.scenarios", names);
    c.grid.scenarios.clear();
    for (const auto& s : names) c.grid.scenarios.push_back(scenario_from_string(s));
  }

  r.get("convergence.n_values", c.convergence.n_values);
  r.get("convergence.paths", c.convergence.paths);
  r.get("convergence.horizon", c.convergence.horizon);
  r.get("output.stride", c.output.stride);
  r.get("seed", c.seed);

  validate_config(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

void validate_config(const Config& c) {
  validate_params(c.network);
  validate_bubble(c.bubble, c.network.horizon, c.network.dt);
  const auto& r = c.risk;
  if (!(r.alpha > 0.0 && r.alpha < 1.0)) throw ConfigError("risk.alpha must lie in (0, 1)");
  if (!(r.Delta > 0.0)) throw ConfigError("risk.Delta must be > 0");
  steps_on_grid(r.Delta, c.network.dt, "risk.Delta");
  if (r.paths == 0) throw ConfigError("risk.paths must be > 0");
  if (!(r.denominator_floor >= 0.0)) throw ConfigError("risk.denominator_floor must be >= 0");
  if (!(r.max_exclusion >= 0.0 && r.max_exclusion <= 1.0))
    throw ConfigError("risk.max_exclusion must lie in [0, 1]");
  if (c.phi.method == PhiMethod::monte_carlo && c.phi.budget < 2)
    throw ConfigError("phi.budget must be >= 2");
  if (c.grid.lambda_values.empty()) throw ConfigError("grid.lambda_values must not be empty");
  if (c.grid.delta_values.empty()) throw ConfigError("grid.delta_values must not be empty");
  if (c.grid.lambda_values.size() > 255 || c.grid.delta_values.size() > 255)
    throw ConfigError("grid axes are limited to 255 values");
  for (double l : c.grid.lambda_values)
    if (!(l > 0.0)) throw ConfigError("grid.lambda_values must be > 0");
  for (double d : c.grid.delta_values) {
    if (!(d >= 0.0)) throw ConfigError("grid.delta_values must be >= 0");
    steps_on_grid(d, c.network.dt, "grid.delta_values entry");
    if (d > c.network.horizon) throw ConfigError("grid.delta_values entry exceeds horizon");
  }
  if (c.convergence.n_values.empty()) throw ConfigError("convergence.n_values must not be empty");
  for (int n : c.convergence.n_values)
    if (n < 2) throw ConfigError("convergence.n_values entries must be >= 2");
  if (c.convergence.paths == 0) throw ConfigError("convergence.paths must be > 0");
  if (!(c.convergence.horizon > 0.0)) throw ConfigError("convergence.horizon must be > 0");
}

nlohmann::json to_json(const Config& c) {
  const auto& p = c.network;
  const auto& b = c.bubble;
  json j;
  j["n"] = p.n;
  j["m"] = p.m;
  j["lambda"] = p.lambda;
  j["sigma1"] = p.sigma1;
  j["sigma2"] = p.sigma2;
  j["delta"] = p.delta;
  j["rho0"] = p.rho0;
  j["rho0_core"] = p.rho0_core;
  j["dt"] = p.dt;
  j["horizon"] = p.horizon;
  j["fitness"]["periphery"] = {{"kind", to_string(p.f_P.kind)}, {"level", p.f_P.level}};
  j["fitness"]["core"] = {{"kind", to_string(p.f_B.kind)}, {"level", p.f_B.level}};
  j["bubble"] = {{"k", b.k},           {"mu_bar", b.mu_bar}, {"sigma_bar", b.sigma_bar},
                 {"Lambda", b.Lambda}, {"sigmaB", b.sigmaB}, {"vol_mode", to_string(b.vol_mode)},
                 {"M0", b.M0},         {"muM", b.muM},       {"sigmaM", b.sigmaM}};
  j["burst"] = {{"kind", to_string(b.burst.kind)},
                {"t", b.burst.t_burst},
                {"q", b.burst.q},
                {"beta_star", b.burst.beta_star}};
  j["risk"] = {{"alpha", c.risk.alpha},
               {"Delta", c.risk.Delta},
               {"paths", c.risk.paths},
               {"denominator_floor", c.risk.denominator_floor},
               {"max_exclusion", c.risk.max_exclusion}};
  j["phi"] = {{"method", to_string(c.phi.method)}, {"budget", c.phi.budget}};
  std::vector<std::string> scen;
  for (auto s : c.grid.scenarios) scen.emplace_back(to_string(s));
  j["grid"] = {{"lambda_values", c.grid.lambda_values},
               {"delta_values", c.grid.delta_values},
               {"scenarios", scen}};
  j["convergence"] = {{"n_values", c.convergence.n_values},
                      {"paths", c.convergence.paths},
                      {"horizon", c.convergence.horizon}};
  j["output"] = {{"stride", c.output.stride}};
  j["seed"] = c.seed;
  return j;
}

std::string config_fingerprint(const Config& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(c).dump())));
  return buf;
}

}  // namespace bubblenet
