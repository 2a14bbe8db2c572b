#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "eebf/beam_family.hpp"
#include "eebf/wmmse_ee.hpp"

namespace eebf {

// Matched filtering (maximum ratio transmission) with equal power split:
// v_{j,k} = sqrt(P_j/K) h_{j,j,k} / ||h_{j,j,k}||.
inline BeamformerSet mrt(const ChannelSet& cs, const SystemParams& params) {
  params.validate();
  BeamformerSet b = BeamformerSet::zeros(cs.cells, cs.users_per_cell, cs.tx_antennas);
  for (int j = 0; j < cs.cells; ++j) {
    const double scale = std::sqrt(params.power_budget_w(j) / cs.users_per_cell);
    for (int k = 0; k < cs.users_per_cell; ++k) {
      const Eigen::VectorXcd& h = cs.of(j, j, k);
      const double nrm = h.norm();
      require(nrm > 0, "mrt: zero channel vector");
      b.at(j, k) = scale / nrm * h;
    }
  }
  return b;
}

struct ZfbfResult {
  BeamformerSet beams;
  // set when some BS has fewer antennas than users to null (rank(H~) = N_t),
  // in which case a least-squares nulling direction is used instead
  bool dimension_deficient = false;
};

// Zero-forcing: each beam is orthogonal to every other served user's channel
// (across all cells) when the antenna count allows exact nulling.
inline ZfbfResult zfbf(const ChannelSet& cs, const SystemParams& params) {
  params.validate();
  const int M = cs.cells, K = cs.users_per_cell, Nt = cs.tx_antennas;
  ZfbfResult res;
  res.beams = BeamformerSet::zeros(M, K, Nt);
  for (int j = 0; j < M; ++j) {
    const double scale = std::sqrt(params.power_budget_w(j) / K);
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXcd& h = cs.of(j, j, k);
      require(h.norm() > 0, "zfbf: zero channel vector");
      // channels of all other served users, as seen from BS j
      Eigen::MatrixXcd others(Nt, M * K - 1);
      int w = 0;
      for (int m = 0; m < M; ++m)
        for (int n = 0; n < K; ++n) {
          if (m == j && n == k) continue;
          others.col(w++) = cs.of(j, m, n);
        }
      Eigen::VectorXcd d;
      if (w == 0) {
        d = h;
      } else {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(others, Eigen::ComputeThinU);
        const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        const double tol = smax * std::max(Nt, w) * std::numeric_limits<double>::epsilon();
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
          if (svd.singularValues()(i) > tol) ++rank;
        if (rank < Nt) {
          const Eigen::MatrixXcd ur = svd.matrixU().leftCols(rank);
          d = h - ur * (ur.adjoint() * h);  // project onto the null space
        } else {
          res.dimension_deficient = true;
          d.setZero(Nt);
        }
        if (d.norm() <= 1e-14 * h.norm()) {
          // no usable exact null direction: least-squares nulling
          res.dimension_deficient = true;
          Eigen::MatrixXcd gram = others * others.adjoint();
          gram.diagonal().array() += smax * smax * 1e-12 + 1e-300;
          d = gram.ldlt().solve(h);
        }
      }
      const double nrm = d.norm();
      require(nrm > 0, "zfbf: degenerate nulling direction");
      res.beams.at(j, k) = scale / nrm * d;
    }
  }
  return res;
}

// Virtual-SINR balancing: regularized-inverse directions with unit loading and
// lambda_j = sigma^2 / P_j, equal power split.
inline BeamformerSet vsinr(const ChannelSet& cs, const SystemParams& params) {
  params.validate();
  const int M = cs.cells, K = cs.users_per_cell;
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(M, K);
  BeamformerSet b = BeamformerSet::zeros(M, K, cs.tx_antennas);
  for (int j = 0; j < M; ++j) {
    const double lambda_j = params.noise_power_w / params.power_budget_w(j);
    auto dirs = parametrized_directions(cs, j, ones, lambda_j);
    const double scale = std::sqrt(params.power_budget_w(j) / K);
    for (int k = 0; k < K; ++k) b.at(j, k) = scale * dirs[k];
  }
  return b;
}

// Weighted sum-rate maximization: the EE inner ascent with eta = 0 (no power
// penalty, budgets binding). Defaults to the virtual-SINR starting point.
inline InnerResult wmmse_sum_rate(const ChannelSet& cs, const SystemParams& params,
                                  std::optional<BeamformerSet> init = std::nullopt,
                                  WmmseOptions opt = {}) {
  const BeamformerSet start = init ? std::move(*init) : vsinr(cs, params);
  return inner_solve(cs, params.weights, 0.0, params, start, opt);
}

}  // namespace eebf
