#pragma once

#include <vector>

#include <Eigen/Dense>

#include "eebf/channel.hpp"
#include "eebf/system_params.hpp"

namespace eebf {

// One beamformer v_{j,k} per served user, owned by BS j.
struct BeamformerSet {
  int cells = 0;
  int users_per_cell = 0;
  int tx_antennas = 0;
  std::vector<Eigen::VectorXcd> v;  // j*K + k

  static BeamformerSet zeros(int M, int K, int Nt) {
    BeamformerSet b;
    b.cells = M;
    b.users_per_cell = K;
    b.tx_antennas = Nt;
    b.v.assign(static_cast<std::size_t>(M) * K, Eigen::VectorXcd::Zero(Nt));
    return b;
  }

  const Eigen::VectorXcd& at(int j, int k) const { return v[user_index(j, k, users_per_cell)]; }
  Eigen::VectorXcd& at(int j, int k) { return v[user_index(j, k, users_per_cell)]; }

  double bs_power(int j) const {
    double p = 0;
    for (int k = 0; k < users_per_cell; ++k) p += at(j, k).squaredNorm();
    return p;
  }
  double transmit_power() const {
    double p = 0;
    for (int j = 0; j < cells; ++j) p += bs_power(j);
    return p;
  }
};

// SINR of user (j,k): |h_{j,j,k}^H v_{j,k}|^2 over all other beams' leakage
// onto that user plus noise.
inline double sinr(const ChannelSet& cs, const BeamformerSet& b, int j, int k, double sigma2) {
  require(sigma2 > 0, "sinr: noise power must be positive");
  const double des = std::norm(cs.of(j, j, k).dot(b.at(j, k)));
  double intf = 0;
  for (int m = 0; m < cs.cells; ++m)
    for (int n = 0; n < cs.users_per_cell; ++n) {
      if (m == j && n == k) continue;
      intf += std::norm(cs.of(m, j, k).dot(b.at(m, n)));
    }
  return des / (intf + sigma2);
}

inline Eigen::MatrixXd all_sinrs(const ChannelSet& cs, const BeamformerSet& b, double sigma2) {
  Eigen::MatrixXd s(cs.cells, cs.users_per_cell);
  for (int j = 0; j < cs.cells; ++j)
    for (int k = 0; k < cs.users_per_cell; ++k) s(j, k) = sinr(cs, b, j, k, sigma2);
  return s;
}

// Weighted sum rate in bits per channel use.
inline double weighted_sum_rate(const ChannelSet& cs, const BeamformerSet& b,
                                const Eigen::MatrixXd& weights, double sigma2) {
  double wsr = 0;
  for (int j = 0; j < cs.cells; ++j)
    for (int k = 0; k < cs.users_per_cell; ++k)
      wsr += weights(j, k) * std::log2(1.0 + sinr(cs, b, j, k, sigma2));
  return wsr;
}

// Total consumed power: zeta * transmit + M*N_t*P_c + M*P_0.
inline double total_power(const BeamformerSet& b, const SystemParams& params) {
  return params.amp_inefficiency * b.transmit_power() + params.fixed_power_w();
}

// Energy efficiency per channel use: (bits/channel use) per watt. This is the
// quantity the optimizers bisect on.
inline double energy_efficiency_per_cu(const ChannelSet& cs, const BeamformerSet& b,
                                       const Eigen::MatrixXd& weights,
                                       const SystemParams& params) {
  return weighted_sum_rate(cs, b, weights, params.noise_power_w) / total_power(b, params);
}

// Reported energy efficiency in bits/Joule at the configured bandwidth.
inline double energy_efficiency(const ChannelSet& cs, const BeamformerSet& b,
                                const Eigen::MatrixXd& weights, const SystemParams& params) {
  return params.bandwidth_hz * energy_efficiency_per_cu(cs, b, weights, params);
}

}  // namespace eebf
