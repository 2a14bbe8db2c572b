// Command-line front end: `run` executes a configured Monte Carlo experiment,
// `figures` pivots result directories into per-figure CSV series, and
// `validate` checks the deterministic gain matrix against Monte Carlo ground
// truth.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "eebf/eebf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_p(double p_dbm) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p_dbm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, long long seed_override,
            int threads, bool traces) {
  eebf::ExperimentConfig cfg = eebf::load_config(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

  eebf::RunOptions ropt;
  ropt.threads = threads;
  ropt.keep_traces = traces;
  const eebf::RunOutput out = eebf::run_experiment(cfg, ropt);

  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "records.csv", std::ios::binary);
    eebf::write_records_csv(os, out.records);
  }
  {
    std::ofstream os(fs::path(out_dir) / "timings.csv", std::ios::binary);
    eebf::write_timings_csv(os, out.records);
  }
  const auto aggs = eebf::aggregate(out.records);
  {
    std::ofstream os(fs::path(out_dir) / "aggregates.csv", std::ios::binary);
    eebf::write_aggregates_csv(os, aggs);
  }
  write_file(fs::path(out_dir) / "aggregates.json", eebf::aggregates_json(aggs).dump(2) + "\n");

  if (!out.asym.empty()) {
    const fs::path pdir = fs::path(out_dir) / "asym_params";
    fs::create_directories(pdir);
    std::string conv = "drop_id,P_dBm,iteration,objective\n";
    for (const auto& ap : out.asym) {
      json j = eebf::asym_params_to_json(ap.params);
      j["drop_id"] = ap.drop_id;
      j["P_dBm"] = ap.p_dbm;
      j["eta_det_per_cu"] = ap.eta_det;
      j["eta_det_bits_per_joule"] = ap.eta_det * cfg.params.bandwidth_hz;
      j["params_hash"] = ap.hash;
      j["outer_iterations"] = ap.outer_iters;
      j["tx_antennas"] = cfg.params.tx_antennas;
      j["correlation_rho"] = cfg.params.corr_rho;
      write_file(pdir / ("drop" + std::to_string(ap.drop_id) + "_p" + fmt_p(ap.p_dbm) + ".json"),
                 j.dump(2) + "\n");
      for (std::size_t i = 0; i < ap.inner_trace.size(); ++i)
        conv += std::to_string(ap.drop_id) + "," + fmt_p(ap.p_dbm) + "," +
                std::to_string(i + 1) + "," + eebf::detail::fmt_double(ap.inner_trace[i]) + "\n";
    }
    write_file(fs::path(out_dir) / "convergence_asymptotic.csv", conv);
  }
  if (traces && !out.conventional_traces.empty()) {
    std::string s = "outer_iter,eta_lo,eta_hi,eta,F,inner_iters,inner_objective\n";
    for (const auto& r : out.conventional_traces)
      s += std::to_string(r.outer_iter) + "," + eebf::detail::fmt_double(r.eta_lo) + "," +
           eebf::detail::fmt_double(r.eta_hi) + "," + eebf::detail::fmt_double(r.eta) + "," +
           eebf::detail::fmt_double(r.F) + "," + std::to_string(r.inner_iters) + "," +
           eebf::detail::fmt_double(r.inner_objective) + "\n";
    write_file(fs::path(out_dir) / "convergence_conventional.csv", s);
  }

  long failed = 0;
  for (const auto& r : out.records) failed += r.failed ? 1 : 0;
  std::cout << "records: " << out.records.size() << " (" << failed << " failed)\n";
  std::cout << "scheme            P_dBm      mean_EE [bits/J]     std_EE\n";
  for (const auto& a : aggs) {
    std::printf("%-17s %6g %20.6g %10.3g\n", a.scheme.c_str(), a.p_dbm, a.mean_ee, a.std_ee);
  }
  std::cout << "outputs written to " << out_dir << "\n";
  return failed == 0 ? 0 : 2;
}

struct RecordRow {
  std::string scheme;
  double p_dbm = 0;
  double ee = 0;
  int drop_id = 0;
  bool failed = false;
  int cells = 0, users = 0, antennas = 0;
  double rho = 0;
};

std::vector<RecordRow> read_records(const fs::path& file) {
  std::ifstream in(file);
  std::vector<RecordRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;  // header
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else
        cur += ch;
    }
    f.push_back(cur);
    if (f.size() < 17) continue;
    RecordRow r;
    r.scheme = f[0];
    r.p_dbm = std::stod(f[1]);
    r.drop_id = std::stoi(f[2]);
    r.ee = std::stod(f[4]);
    r.failed = f[11] == "1";
    r.cells = std::stoi(f[13]);
    r.users = std::stoi(f[14]);
    r.antennas = std::stoi(f[15]);
    r.rho = std::stod(f[16]);
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_figures(const std::string& results_dir, std::string out_dir) {
  if (out_dir.empty()) out_dir = results_dir;
  fs::create_directories(out_dir);

  std::vector<RecordRow> rows;
  std::vector<fs::path> param_files, convergence_files;
  for (const auto& entry : fs::recursive_directory_iterator(results_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == "records.csv") {
      auto r = read_records(entry.path());
      rows.insert(rows.end(), r.begin(), r.end());
    } else if (entry.path().parent_path().filename() == "asym_params" &&
               entry.path().extension() == ".json") {
      param_files.push_back(entry.path());
    } else if (name == "convergence_asymptotic.csv") {
      convergence_files.push_back(entry.path());
    }
  }
  if (rows.empty()) {
    std::cerr << "figures: no records.csv found under " << results_dir << "\n";
    return 1;
  }

  struct Stat {
    double sum = 0, sq = 0;
    long n = 0;
    void add(double v) { sum += v; sq += v * v; ++n; }
    double mean() const { return n ? sum / n : 0; }
    double sd() const {
      return n > 1 ? std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1))) : 0;
    }
  };

  // EE vs transmit power, one series per scheme, split by K
  {
    std::map<std::tuple<int, std::string, double>, Stat> agg;
    for (const auto& r : rows)
      if (!r.failed) agg[{r.users, r.scheme, r.p_dbm}].add(r.ee);
    std::string s = "users_per_cell,scheme,P_dBm,mean_EE,std_EE,n\n";
    for (const auto& [key, st] : agg)
      s += std::to_string(std::get<0>(key)) + "," + std::get<1>(key) + "," +
           fmt_p(std::get<2>(key)) + "," + eebf::detail::fmt_double(st.mean()) + "," +
           eebf::detail::fmt_double(st.sd()) + "," + std::to_string(st.n) + "\n";
    write_file(fs::path(out_dir) / "fig_ee_vs_power.csv", s);
  }
  // EE vs users per cell for the EE-optimizing schemes
  {
    std::map<std::tuple<double, std::string, int>, Stat> agg;
    for (const auto& r : rows)
      if (!r.failed && (r.scheme == "ee-conventional" || r.scheme == "ee-asymptotic"))
        agg[{r.p_dbm, r.scheme, r.users}].add(r.ee);
    std::string s = "P_dBm,scheme,users_per_cell,mean_EE,n\n";
    for (const auto& [key, st] : agg)
      s += fmt_p(std::get<0>(key)) + "," + std::get<1>(key) + "," +
           std::to_string(std::get<2>(key)) + "," + eebf::detail::fmt_double(st.mean()) + "," +
           std::to_string(st.n) + "\n";
    write_file(fs::path(out_dir) / "fig_ee_vs_users.csv", s);
  }
  // EE vs correlation
  {
    std::map<std::tuple<double, std::string, double>, Stat> agg;
    for (const auto& r : rows)
      if (!r.failed) agg[{r.rho, r.scheme, r.p_dbm}].add(r.ee);
    std::string s = "correlation_rho,scheme,P_dBm,mean_EE,std_EE,n\n";
    for (const auto& [key, st] : agg)
      s += eebf::detail::fmt_double(std::get<0>(key)) + "," + std::get<1>(key) + "," +
           fmt_p(std::get<2>(key)) + "," + eebf::detail::fmt_double(st.mean()) + "," +
           eebf::detail::fmt_double(st.sd()) + "," + std::to_string(st.n) + "\n";
    write_file(fs::path(out_dir) / "fig_ee_vs_correlation.csv", s);
  }
  // deterministic prediction vs Monte Carlo, per (N_t, P, drop)
  {
    std::map<std::tuple<int, double, int>, Stat> mc;
    for (const auto& r : rows)
      if (!r.failed && r.scheme == "ee-asymptotic") mc[{r.antennas, r.p_dbm, r.drop_id}].add(r.ee);
    std::string s =
        "tx_antennas,P_dBm,drop_id,mc_mean_EE,mc_std_EE,n,eta_det_bits_per_joule\n";
    for (const auto& pf : param_files) {
      std::ifstream in(pf);
      json j = json::parse(in, nullptr, false);
      if (j.is_discarded()) continue;
      const int nt = j.value("tx_antennas", 0);
      const double p = j.value("P_dBm", 0.0);
      const int drop = j.value("drop_id", 0);
      const auto it = mc.find({nt, p, drop});
      if (it == mc.end()) continue;
      s += std::to_string(nt) + "," + fmt_p(p) + "," + std::to_string(drop) + "," +
           eebf::detail::fmt_double(it->second.mean()) + "," +
           eebf::detail::fmt_double(it->second.sd()) + "," + std::to_string(it->second.n) + "," +
           eebf::detail::fmt_double(j.value("eta_det_bits_per_joule", 0.0)) + "\n";
    }
    write_file(fs::path(out_dir) / "fig_det_vs_mc.csv", s);
  }
  // inner-layer convergence traces pass through unchanged
  {
    std::string s = "drop_id,P_dBm,iteration,objective\n";
    for (const auto& cf : convergence_files) {
      std::ifstream in(cf);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) s += line + "\n";
    }
    write_file(fs::path(out_dir) / "fig_convergence.csv", s);
  }
  std::cout << "figure series written to " << out_dir << "\n";
  return 0;
}

int cmd_validate(std::uint64_t seed, int draws) {
  const auto report = eebf::run_default_calibration(seed, draws);
  bool ok = true;
  std::printf("%-22s %8s %12s %12s %12s %8s\n", "case", "entries", "median", "mean", "max",
              "gate");
  const auto print = [&](const eebf::CalibrationResult& r, bool gated) {
    const bool pass = !gated || r.median_rel_err <= 0.05;
    ok = ok && pass;
    std::printf("%-22s %8d %11.3f%% %11.3f%% %11.3f%% %8s\n", r.name.c_str(), r.entries,
                100 * r.median_rel_err, 100 * r.mean_rel_err, 100 * r.max_rel_err,
                gated ? (pass ? "pass" : "FAIL") : "info");
  };
  for (const auto& r : report.gated) print(r, true);
  for (const auto& r : report.info) print(r, false);
  std::cout << (ok ? "validation passed\n" : "validation FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficient multi-cell MISO beamforming simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", results_dir, fig_out;
  long long seed_override = -1;
  int threads = 1, draws = 2000;
  std::uint64_t vseed = 1;
  bool traces = false;

  auto* run = app.add_subcommand("run", "run a configured Monte Carlo experiment");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (default: out)");
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--threads", threads, "worker threads (default 1)");
  run->add_flag("--traces", traces, "emit per-iteration convergence CSVs");

  auto* figures = app.add_subcommand("figures", "pivot result directories into figure CSVs");
  figures->add_option("--results", results_dir, "directory containing run outputs")->required();
  figures->add_option("--out", fig_out, "where to write figure CSVs (default: results dir)");

  auto* validate =
      app.add_subcommand("validate", "deterministic gain matrix vs Monte Carlo ground truth");
  validate->add_option("--seed", vseed, "calibration seed");
  validate->add_option("--draws", draws, "Monte Carlo draws (default 2000)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed_override, threads, traces);
    if (figures->parsed()) return cmd_figures(results_dir, fig_out);
    if (validate->parsed()) return cmd_validate(vseed, draws);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
