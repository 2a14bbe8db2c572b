#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "eebf/geometry.hpp"
#include "eebf/system_params.hpp"

namespace eebf {

inline const std::vector<std::string>& known_schemes() {
  static const std::vector<std::string> s{"mrt",     "zfbf",            "vsinr",
                                          "wmmse-sr", "ee-conventional", "ee-asymptotic"};
  return s;
}

// One Monte Carlo experiment: a scenario, a transmit-power sweep, scheme
// selection, and sampling depths. Power-like keys are dBm in the file and
// converted to watts exactly once, here.
struct ExperimentConfig {
  SystemParams params;     // power_budget_w is filled per sweep point
  CellGeometry geometry;
  std::vector<double> sweep_dbm;
  std::vector<std::string> schemes;
  int n_drops = 1;
  int n_realizations = 1;
  std::uint64_t seed = 1;

  SystemParams params_at(double p_dbm) const {
    SystemParams sp = params;
    sp.power_budget_w = Eigen::VectorXd::Constant(sp.cells, dbm_to_watt(p_dbm));
    return sp;
  }

  void validate() const {
    geometry.validate();
    require(!sweep_dbm.empty(), "config: power_sweep_dbm must not be empty");
    require(!schemes.empty(), "config: schemes must not be empty");
    for (const auto& s : schemes)
      require(std::find(known_schemes().begin(), known_schemes().end(), s) !=
                  known_schemes().end(),
              "config: unknown scheme '" + s + "'");
    require(n_drops >= 1 && n_realizations >= 1, "config: drops/realizations must be >= 1");
    params_at(sweep_dbm.front()).validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    require(pos == tok.size(), "config: bad number '" + tok + "' in " + key);
    out.push_back(v);
  }
  return out;
}

inline std::vector<std::string> parse_string_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

}  // namespace detail

// Plain "key = value" format; '#' starts a comment; lists are comma-separated.
// Unknown keys are rejected so typos fail loudly.
inline ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    require(!key.empty() && !val.empty(),
            "config: empty key or value on line " + std::to_string(lineno));
    require(!kv.count(key), "config: duplicate key '" + key + "'");
    kv[key] = val;
  }

  ExperimentConfig cfg;
  SystemParams& sp = cfg.params;
  Eigen::VectorXd weight_list;

  const auto take = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  const auto num = [&](const char* key, double dflt) {
    const std::string v = take(key);
    return v.empty() ? dflt : std::stod(v);
  };

  sp.cells = static_cast<int>(num("cells", 3));
  sp.users_per_cell = static_cast<int>(num("users_per_cell", 3));
  sp.tx_antennas = static_cast<int>(num("tx_antennas", 4));
  cfg.geometry.radius_m = num("cell_radius_m", 500.0);
  cfg.geometry.min_dist_m = num("min_bs_user_distance_m", 35.0);
  sp.circuit_power_w = dbm_to_watt(num("circuit_power_per_antenna_dbm", 30.0));
  sp.static_power_w = dbm_to_watt(num("static_power_dbm", 40.0));
  sp.noise_power_w = dbm_to_watt(num("noise_power_dbm", -94.0));
  sp.amp_inefficiency = num("amplifier_inefficiency", 2.0);
  sp.corr_rho = num("correlation_rho", 0.0);
  sp.bandwidth_hz = num("bandwidth_mhz", 20.0) * 1e6;
  cfg.n_drops = static_cast<int>(num("drops", 1));
  cfg.n_realizations = static_cast<int>(num("realizations_per_drop", 1));
  cfg.seed = static_cast<std::uint64_t>(num("seed", 1));

  const std::string sweep = take("power_sweep_dbm");
  cfg.sweep_dbm = sweep.empty() ? std::vector<double>{26, 30, 34, 38, 42, 46}
                                : detail::parse_double_list(sweep, "power_sweep_dbm");

  const std::string schemes = take("schemes");
  cfg.schemes = schemes.empty()
                    ? std::vector<std::string>{"ee-conventional", "ee-asymptotic"}
                    : detail::parse_string_list(schemes);

  const std::string weights = take("weights");
  if (weights.empty()) {
    sp.weights = Eigen::MatrixXd::Ones(sp.cells, sp.users_per_cell);
  } else {
    const auto w = detail::parse_double_list(weights, "weights");
    require(static_cast<int>(w.size()) == sp.users_per_cell,
            "config: weights must list users_per_cell values (applied to every cell)");
    sp.weights.resize(sp.cells, sp.users_per_cell);
    for (int j = 0; j < sp.cells; ++j)
      for (int k = 0; k < sp.users_per_cell; ++k) sp.weights(j, k) = w[k];
  }

  require(kv.empty(), "config: unknown key '" + (kv.empty() ? "" : kv.begin()->first) + "'");
  sp.power_budget_w = Eigen::VectorXd::Constant(sp.cells, 1.0);  // placeholder until sweep applies
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");
  return parse_config(in);
}

}  // namespace eebf
