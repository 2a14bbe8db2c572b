#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "eebf/asymptotic.hpp"
#include "eebf/beam_family.hpp"
#include "eebf/det_equiv.hpp"

// Calibration of the deterministic gain matrix against Monte Carlo sampling of
// the finite-dimensional gains it approximates. This is the ground truth for
// the trace-normalization conventions used in det_equiv.hpp.
namespace eebf {

// Finite-sample gain matrix for one realization: row (j,k) = transmitting
// pair, column (m,n) = |h_{j,m,n}^H vbar_{j,k}|^2 with unit-norm directions.
inline Eigen::MatrixXd sample_gain_matrix(const ChannelSet& cs, const Eigen::MatrixXd& beta,
                                          const Eigen::VectorXd& lambda) {
  const int M = cs.cells, K = cs.users_per_cell;
  const int MK = M * K;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(MK, MK);
  for (int j = 0; j < M; ++j) {
    const auto dirs = parametrized_directions(cs, j, beta, lambda(j));
    for (int k = 0; k < K; ++k) {
      const int q0 = user_index(j, k, K);
      for (int m = 0; m < M; ++m)
        for (int n = 0; n < K; ++n)
          G(q0, user_index(m, n, K)) += std::norm(cs.of(j, m, n).dot(dirs[k]));
    }
  }
  return G;
}

struct CalibrationCase {
  std::string name;
  Eigen::MatrixXd beta;
  Eigen::VectorXd lambda;
};

struct CalibrationResult {
  std::string name;
  double median_rel_err = 0;
  double max_rel_err = 0;
  double mean_rel_err = 0;
  int entries = 0;
  double diag_median_rel_err = 0;
};

// Compare G° against the Monte Carlo mean of sampled G over n_draws fading
// realizations. Relative errors are taken entrywise over all entries whose
// deterministic value is nonzero.
inline CalibrationResult run_calibration_case(const UserDrop& drop, const SystemParams& params,
                                              const CalibrationCase& cc, int n_draws,
                                              std::uint64_t seed) {
  params.validate();
  const int MK = params.cells * params.users_per_cell;
  const DetGainMatrix det = build_det_gain_matrix(cc.beta, cc.lambda, drop.epsilon, params);

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(MK, MK);
  for (int d = 0; d < n_draws; ++d) {
    const ChannelSet cs = generate_channels(
        drop, params, derive_seed(seed, {0x6d63ULL, static_cast<std::uint64_t>(d)}));
    mean += sample_gain_matrix(cs, cc.beta, cc.lambda);
  }
  mean /= n_draws;

  std::vector<double> errs, diag_errs;
  for (int r = 0; r < MK; ++r)
    for (int c = 0; c < MK; ++c) {
      if (det.G(r, c) == 0) continue;
      const double rel = std::abs(mean(r, c) - det.G(r, c)) / std::abs(det.G(r, c));
      errs.push_back(rel);
      if (r == c) diag_errs.push_back(rel);
    }
  const auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  };
  CalibrationResult res;
  res.name = cc.name;
  res.entries = static_cast<int>(errs.size());
  res.median_rel_err = median(errs);
  res.diag_median_rel_err = median(diag_errs);
  res.max_rel_err = errs.empty() ? 0.0 : *std::max_element(errs.begin(), errs.end());
  double s = 0;
  for (double e : errs) s += e;
  res.mean_rel_err = errs.empty() ? 0.0 : s / errs.size();
  return res;
}

// The standard calibration scenario: a single large cell, N_t = 40, K = 20.
// Gated cases run uncorrelated; a correlated case is reported informationally.
struct CalibrationReport {
  std::vector<CalibrationResult> gated;    // must satisfy median <= 0.05
  std::vector<CalibrationResult> info;     // reported, not gated
};

inline CalibrationReport run_default_calibration(std::uint64_t seed, int n_draws = 2000) {
  SystemParams params = SystemParams::make(1, 20, 40, dbm_to_watt(46.0));
  const CellGeometry geo{};
  const UserDrop drop = generate_user_drop(geo, params.cells, params.users_per_cell,
                                           derive_seed(seed, {0x63616cULL}));
  const int M = params.cells, K = params.users_per_cell;

  std::vector<CalibrationCase> cases;
  // matched filtering: zero loading, any positive regularizer
  cases.push_back({"matched-filter", Eigen::MatrixXd::Zero(M, K),
                   Eigen::VectorXd::Constant(M, 1.0)});
  // graded loading at a small but non-degenerate regularizer scale
  Eigen::MatrixXd graded(M, K);
  for (int k = 0; k < K; ++k) graded(0, k) = 0.2 + 1.8 * k / (K - 1);
  cases.push_back({"graded-loading", graded, Eigen::VectorXd::Constant(M, 1e-10)});
  // the operating point the large-system optimizer actually converges to in
  // this scenario: the most representative place to certify the surrogate
  {
    const OuterLayerResult opt = outer_layer(drop.epsilon, params);
    cases.push_back({"optimizer-point", opt.params.beta, opt.params.lambda});
  }

  CalibrationReport report;
  for (const auto& cc : cases)
    report.gated.push_back(run_calibration_case(drop, params, cc, n_draws, seed));

  // Informational extremes. With a regularizer ~6 orders below the loadings
  // and fewer interferers than antennas, the directions degenerate to
  // null-space projections; interference entries are ridge-suppressed and
  // their relative error carries an O(1/N_t) finite-size bias (it halves with
  // each doubling of N_t but is ~10% at N_t=40). Correlated channels add a
  // cross-covariance approximation on interference terms.
  CalibrationCase near_zf{"near-zero-ridge", Eigen::MatrixXd::Ones(M, K),
                          Eigen::VectorXd::Constant(
                              M, params.noise_power_w / params.power_budget_w(0))};
  report.info.push_back(run_calibration_case(drop, params, near_zf, n_draws, seed));
  SystemParams corr = params;
  corr.corr_rho = 0.5;
  CalibrationCase cc{"unit-loading-rho0.5", Eigen::MatrixXd::Ones(M, K),
                     Eigen::VectorXd::Constant(M, corr.noise_power_w / corr.power_budget_w(0))};
  report.info.push_back(run_calibration_case(drop, corr, cc, n_draws, seed));
  return report;
}

}  // namespace eebf
