#pragma once

#include <vector>

#include <Eigen/Dense>

#include "eebf/geometry.hpp"
#include "eebf/rng.hpp"
#include "eebf/system_params.hpp"

namespace eebf {

// Exponential transmit correlation: R(i,j) = rho^|i-j|. Real symmetric,
// unit diagonal, positive definite for rho in [0, 1).
inline Eigen::MatrixXd correlation_matrix(double rho, int n) {
  require(rho >= 0.0 && rho < 1.0, "correlation: rho must lie in [0, 1)");
  require(n >= 1, "correlation: dimension must be >= 1");
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  return r;
}

// One fading realization: h_{m,j,k} = sqrt(eps_{m,j,k}) R^{1/2} z with
// z ~ CN(0, I). Channels are indexed by (transmitting BS m, user (j,k)).
struct ChannelSet {
  int cells = 0;
  int users_per_cell = 0;
  int tx_antennas = 0;
  std::vector<Eigen::VectorXcd> h;  // ((m*M)+j)*K + k
  Eigen::MatrixXd R;                // common transmit correlation
  Eigen::MatrixXd epsilon;          // M x (M*K), copied from the drop

  const Eigen::VectorXcd& of(int m, int j, int k) const {
    return h[(static_cast<std::size_t>(m) * cells + j) * users_per_cell + k];
  }
  Eigen::VectorXcd& of(int m, int j, int k) {
    return h[(static_cast<std::size_t>(m) * cells + j) * users_per_cell + k];
  }
};

inline ChannelSet generate_channels(const UserDrop& drop, const SystemParams& params,
                                    std::uint64_t seed) {
  params.validate();
  const int M = params.cells, K = params.users_per_cell, Nt = params.tx_antennas;
  require(drop.epsilon.rows() == M && drop.epsilon.cols() == M * K,
          "channels: drop does not match params dimensions");

  ChannelSet cs;
  cs.cells = M;
  cs.users_per_cell = K;
  cs.tx_antennas = Nt;
  cs.R = correlation_matrix(params.corr_rho, Nt);
  cs.epsilon = drop.epsilon;
  cs.h.resize(static_cast<std::size_t>(M) * M * K);

  // R^{1/2} via eigendecomposition; kept complex so it multiplies z directly.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cs.R);
  require(es.info() == Eigen::Success, "channels: correlation eigendecomposition failed");
  const Eigen::MatrixXd rhalf_r = es.eigenvectors() *
                                  es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                  es.eigenvectors().transpose();
  const Eigen::MatrixXcd rhalf = rhalf_r.cast<Cplx>();
  const bool identity_r = params.corr_rho == 0.0;

  Rng rng(derive_seed(seed, {0x6368616eULL}));  // "chan" substream
  for (int m = 0; m < M; ++m) {
    for (int j = 0; j < M; ++j) {
      for (int k = 0; k < K; ++k) {
        // z is always drawn, so the stream position is independent of eps
        const Eigen::VectorXcd z = rng.cgaussian_vector(Nt);
        const double scale = std::sqrt(drop.epsilon(m, user_index(j, k, K)));
        cs.of(m, j, k) = identity_r ? (scale * z).eval() : (scale * (rhalf * z)).eval();
      }
    }
  }
  return cs;
}

}  // namespace eebf
