#pragma once

#include <vector>

#include <Eigen/Dense>

#include "eebf/channel.hpp"
#include "eebf/metrics.hpp"

namespace eebf {

// Unit-norm directions of the regularized-inverse beam family at BS j:
//   d_{j,k} ∝ (sum_{m,n} beta_{m,n} h_{j,m,n} h_{j,m,n}^H + lambda_j I)^{-1} h_{j,j,k}.
// beta = 1, lambda = sigma^2/P_j recovers the virtual-SINR beams; beta = 0
// recovers matched filtering; the large-system optimizer supplies its own
// (beta, lambda). A zero own-channel yields a zero direction.
inline std::vector<Eigen::VectorXcd> parametrized_directions(const ChannelSet& cs, int j,
                                                             const Eigen::MatrixXd& beta,
                                                             double lambda_j) {
  const int M = cs.cells, K = cs.users_per_cell, Nt = cs.tx_antennas;
  require(beta.rows() == M && beta.cols() == K, "directions: beta must be M x K");
  require((beta.array() >= 0).all(), "directions: beta must be nonnegative");
  require(lambda_j >= 0, "directions: lambda must be nonnegative");

  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(Nt, Nt);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < K; ++n)
      if (beta(m, n) > 0) A.selfadjointView<Eigen::Lower>().rankUpdate(cs.of(j, m, n), beta(m, n));
  A = A.selfadjointView<Eigen::Lower>();
  A.diagonal().array() += lambda_j;

  Eigen::LDLT<Eigen::MatrixXcd> ldlt(A);
  const bool solvable = ldlt.info() == Eigen::Success && ldlt.isPositive();

  std::vector<Eigen::VectorXcd> dirs(K);
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXcd& h = cs.of(j, j, k);
    Eigen::VectorXcd d;
    if (solvable) {
      d = ldlt.solve(h);
    } else {
      // semidefinite corner (lambda = 0 with rank-deficient loading): ridge it
      Eigen::MatrixXcd Ar = A;
      Ar.diagonal().array() += std::max(1e-12 * std::real(A.trace()) / Nt, 1e-300);
      d = Ar.ldlt().solve(h);
    }
    const double nrm = d.norm();
    dirs[k] = nrm > 0 ? Eigen::VectorXcd(d / nrm) : Eigen::VectorXcd::Zero(Nt);
  }
  return dirs;
}

}  // namespace eebf
