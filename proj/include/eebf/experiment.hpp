#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <ostream>
#include <thread>

#include "eebf/asymptotic.hpp"
#include "eebf/baselines.hpp"
#include "eebf/config.hpp"

namespace eebf {

// One evaluated (scheme, sweep point, drop, realization) cell.
struct ResultRecord {
  std::string scheme;
  double p_dbm = 0;
  int drop_id = 0;
  int realization_id = 0;
  double ee_bits_per_joule = 0;
  double wsr_bits_per_s = 0;
  double total_power_w = 0;
  Eigen::VectorXd sinrs;  // per user, flat (j*K+k)
  int outer_iterations = 0;
  int inner_iterations = 0;
  std::uint64_t asym_hash = 0;  // ee-asymptotic only: hash of the reused parameters
  bool failed = false;
  std::string error;
  double wall_ms = 0;  // diagnostics only; excluded from deterministic outputs
  // scenario echo, so figure pivots work across heterogeneous runs
  int cells = 0, users_per_cell = 0, tx_antennas = 0;
  double corr_rho = 0;
};

struct AggregateRow {
  std::string scheme;
  double p_dbm = 0;
  double mean_ee = 0, std_ee = 0;
  double mean_wsr = 0, std_wsr = 0;
  long n = 0;
};

// Large-system parameters computed once per (drop, sweep point) and reused by
// every realization of that cell.
struct AsymParamsRecord {
  int drop_id = 0;
  double p_dbm = 0;
  AsymptoticParams params;
  double eta_det = 0;  // per channel use
  std::uint64_t hash = 0;
  int outer_iters = 0;
  std::vector<double> inner_trace;
};

struct RunStats {
  long asym_optimizer_invocations = 0;
};

struct RunOutput {
  std::vector<ResultRecord> records;
  std::vector<AsymParamsRecord> asym;
  std::vector<DinkelbachTraceRow> conventional_traces;  // only with keep_traces
  RunStats stats;
};

namespace detail {

// Index-sharded parallel loop; results land in preallocated slots, so the
// reduction order (and therefore every aggregate) is thread-count independent.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int use = std::min<std::size_t>(threads, n);
  pool.reserve(use);
  for (int t = 0; t < use; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

inline void fill_metrics(ResultRecord& rec, const ChannelSet& cs, const BeamformerSet& b,
                         const SystemParams& sp) {
  const Eigen::MatrixXd s = all_sinrs(cs, b, sp.noise_power_w);
  rec.sinrs.resize(s.size());
  for (int j = 0; j < sp.cells; ++j)
    for (int k = 0; k < sp.users_per_cell; ++k)
      rec.sinrs(user_index(j, k, sp.users_per_cell)) = s(j, k);
  double wsr = 0;
  for (int j = 0; j < sp.cells; ++j)
    for (int k = 0; k < sp.users_per_cell; ++k)
      wsr += sp.weights(j, k) * std::log2(1.0 + s(j, k));
  rec.total_power_w = total_power(b, sp);
  rec.wsr_bits_per_s = sp.bandwidth_hz * wsr;
  rec.ee_bits_per_joule = rec.wsr_bits_per_s / rec.total_power_w;
}

}  // namespace detail

struct RunOptions {
  int threads = 1;
  bool keep_traces = false;  // collect per-iteration convergence rows
};

inline RunOutput run_experiment(const ExperimentConfig& cfg, RunOptions ropt = {}) {
  cfg.validate();
  const bool wants_asym = std::find(cfg.schemes.begin(), cfg.schemes.end(), "ee-asymptotic") !=
                          cfg.schemes.end();

  RunOutput out;

  // user drops: one statistics epoch each
  std::vector<UserDrop> drops(cfg.n_drops);
  for (int d = 0; d < cfg.n_drops; ++d)
    drops[d] = generate_user_drop(cfg.geometry, cfg.params.cells, cfg.params.users_per_cell,
                                  derive_seed(cfg.seed, {0x64, static_cast<std::uint64_t>(d)}));

  // large-system parameters once per (drop, sweep point); realization-independent
  std::atomic<long> asym_calls{0};
  if (wants_asym) {
    out.asym.resize(static_cast<std::size_t>(cfg.n_drops) * cfg.sweep_dbm.size());
    detail::parallel_for(out.asym.size(), ropt.threads, [&](std::size_t idx) {
      const int d = static_cast<int>(idx / cfg.sweep_dbm.size());
      const int pi = static_cast<int>(idx % cfg.sweep_dbm.size());
      const SystemParams sp = cfg.params_at(cfg.sweep_dbm[pi]);
      const OuterLayerResult r = outer_layer(drops[d].epsilon, sp);
      asym_calls.fetch_add(1);
      AsymParamsRecord rec;
      rec.drop_id = d;
      rec.p_dbm = cfg.sweep_dbm[pi];
      rec.params = r.params;
      rec.eta_det = r.eta_det;
      rec.hash = params_hash(r.params);
      rec.outer_iters = r.outer_iters;
      rec.inner_trace = r.last_trace;
      out.asym[idx] = std::move(rec);
    });
  }
  const auto asym_at = [&](int drop, int pi) -> const AsymParamsRecord& {
    return out.asym[static_cast<std::size_t>(drop) * cfg.sweep_dbm.size() + pi];
  };

  // flat record grid in canonical order (drop, sweep point, realization, scheme)
  const std::size_t n_records = static_cast<std::size_t>(cfg.n_drops) * cfg.sweep_dbm.size() *
                                cfg.n_realizations * cfg.schemes.size();
  out.records.resize(n_records);
  std::vector<std::vector<DinkelbachTraceRow>> traces(ropt.keep_traces ? n_records : 0);

  detail::parallel_for(n_records, ropt.threads, [&](std::size_t idx) {
    std::size_t rest = idx;
    const int si = static_cast<int>(rest % cfg.schemes.size());
    rest /= cfg.schemes.size();
    const int rz = static_cast<int>(rest % cfg.n_realizations);
    rest /= cfg.n_realizations;
    const int pi = static_cast<int>(rest % cfg.sweep_dbm.size());
    const int d = static_cast<int>(rest / cfg.sweep_dbm.size());

    const SystemParams sp = cfg.params_at(cfg.sweep_dbm[pi]);
    ResultRecord rec;
    rec.scheme = cfg.schemes[si];
    rec.p_dbm = cfg.sweep_dbm[pi];
    rec.drop_id = d;
    rec.realization_id = rz;
    rec.cells = sp.cells;
    rec.users_per_cell = sp.users_per_cell;
    rec.tx_antennas = sp.tx_antennas;
    rec.corr_rho = sp.corr_rho;

    const auto t0 = std::chrono::steady_clock::now();
    try {
      // fading substream depends on (seed, drop, realization) only, so every
      // scheme and sweep point sees the same channel draw
      const ChannelSet cs = generate_channels(
          drops[d], sp,
          derive_seed(cfg.seed, {0x72, static_cast<std::uint64_t>(d),
                                 static_cast<std::uint64_t>(rz)}));
      BeamformerSet beams;
      if (rec.scheme == "mrt") {
        beams = mrt(cs, sp);
      } else if (rec.scheme == "zfbf") {
        beams = zfbf(cs, sp).beams;
      } else if (rec.scheme == "vsinr") {
        beams = vsinr(cs, sp);
      } else if (rec.scheme == "wmmse-sr") {
        InnerResult r = wmmse_sum_rate(cs, sp);
        rec.inner_iterations = r.iterations;
        beams = std::move(r.v);
      } else if (rec.scheme == "ee-conventional") {
        std::vector<DinkelbachTraceRow>* sink = ropt.keep_traces ? &traces[idx] : nullptr;
        DinkelbachResult r = dinkelbach_solve(cs, sp.weights, sp, vsinr(cs, sp), {}, sink);
        rec.outer_iterations = r.outer_iters;
        rec.inner_iterations = static_cast<int>(r.total_inner_iters);
        beams = std::move(r.v);
      } else {  // ee-asymptotic
        const AsymParamsRecord& ap = asym_at(d, pi);
        rec.asym_hash = ap.hash;
        beams = reconstruct_beamformers(cs, ap.params);
      }
      detail::fill_metrics(rec, cs, beams, sp);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    out.records[idx] = std::move(rec);
  });

  if (ropt.keep_traces)
    for (auto& t : traces)
      out.conventional_traces.insert(out.conventional_traces.end(), t.begin(), t.end());
  out.stats.asym_optimizer_invocations = asym_calls.load();
  return out;
}

// Group by (scheme, sweep point) preserving configured scheme order and
// ascending power; mean and unbiased standard deviation (0 for a single record).
inline std::vector<AggregateRow> aggregate(const std::vector<ResultRecord>& records) {
  std::map<std::pair<std::string, double>, std::vector<const ResultRecord*>> groups;
  std::vector<std::pair<std::string, double>> order;
  std::map<std::string, int> scheme_rank;  // first-appearance order
  for (const auto& r : records) {
    if (r.failed) continue;
    const auto key = std::make_pair(r.scheme, r.p_dbm);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
    scheme_rank.emplace(r.scheme, static_cast<int>(scheme_rank.size()));
  }
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    const int ra = scheme_rank.at(a.first), rb = scheme_rank.at(b.first);
    return ra != rb ? ra < rb : a.second < b.second;
  });
  std::vector<AggregateRow> rows;
  for (const auto& key : order) {
    const auto& g = groups[key];
    AggregateRow row;
    row.scheme = key.first;
    row.p_dbm = key.second;
    row.n = static_cast<long>(g.size());
    double se = 0, sw = 0;
    for (const auto* r : g) {
      se += r->ee_bits_per_joule;
      sw += r->wsr_bits_per_s;
    }
    row.mean_ee = se / row.n;
    row.mean_wsr = sw / row.n;
    if (row.n > 1) {
      double ve = 0, vw = 0;
      for (const auto* r : g) {
        ve += (r->ee_bits_per_joule - row.mean_ee) * (r->ee_bits_per_joule - row.mean_ee);
        vw += (r->wsr_bits_per_s - row.mean_wsr) * (r->wsr_bits_per_s - row.mean_wsr);
      }
      row.std_ee = std::sqrt(ve / (row.n - 1));
      row.std_wsr = std::sqrt(vw / (row.n - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// records.csv: everything needed to recompute EE = WSR / total power; wall
// times go to the separate timings writer so these bytes are deterministic.
inline void write_records_csv(std::ostream& os, const std::vector<ResultRecord>& records) {
  os << "scheme,P_dBm,drop_id,realization_id,EE_bits_per_joule,WSR_bits_per_s,total_power_W,"
        "sinrs,outer_iterations,inner_iterations,asym_params_hash,failed,error,cells,"
        "users_per_cell,tx_antennas,correlation_rho\n";
  for (const auto& r : records) {
    os << r.scheme << ',' << detail::fmt_double(r.p_dbm) << ',' << r.drop_id << ','
       << r.realization_id << ',' << detail::fmt_double(r.ee_bits_per_joule) << ','
       << detail::fmt_double(r.wsr_bits_per_s) << ',' << detail::fmt_double(r.total_power_w)
       << ',';
    for (Eigen::Index i = 0; i < r.sinrs.size(); ++i) {
      if (i) os << ';';
      os << detail::fmt_double(r.sinrs(i));
    }
    os << ',' << r.outer_iterations << ',' << r.inner_iterations << ',';
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.asym_hash));
    std::string err = r.error;  // keep the row machine-splittable on ','
    for (char& c : err)
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    os << (r.asym_hash ? hex : "") << ',' << (r.failed ? 1 : 0) << ','
       << err << ',' << r.cells << ',' << r.users_per_cell << ',' << r.tx_antennas << ','
       << detail::fmt_double(r.corr_rho) << '\n';
  }
}

inline void write_timings_csv(std::ostream& os, const std::vector<ResultRecord>& records) {
  os << "scheme,P_dBm,drop_id,realization_id,wall_ms\n";
  for (const auto& r : records)
    os << r.scheme << ',' << detail::fmt_double(r.p_dbm) << ',' << r.drop_id << ','
       << r.realization_id << ',' << detail::fmt_double(r.wall_ms) << '\n';
}

inline void write_aggregates_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << "scheme,P_dBm,mean_EE,std_EE,mean_WSR,std_WSR,n\n";
  for (const auto& r : rows)
    os << r.scheme << ',' << detail::fmt_double(r.p_dbm) << ',' << detail::fmt_double(r.mean_ee)
       << ',' << detail::fmt_double(r.std_ee) << ',' << detail::fmt_double(r.mean_wsr) << ','
       << detail::fmt_double(r.std_wsr) << ',' << r.n << '\n';
}

inline nlohmann::json aggregates_json(const std::vector<AggregateRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"scheme", r.scheme},
                   {"P_dBm", r.p_dbm},
                   {"mean_EE", r.mean_ee},
                   {"std_EE", r.std_ee},
                   {"mean_WSR", r.mean_wsr},
                   {"std_WSR", r.std_wsr},
                   {"n", r.n}});
  return arr;
}

}  // namespace eebf
