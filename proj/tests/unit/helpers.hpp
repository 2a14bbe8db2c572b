#pragma once

#include <complex>
#include <cstdint>

#include <catch2/catch_amalgamated.hpp>

#include "eebf/eebf.hpp"

// Shared fixtures for the unit suite. The reference metric implementations
// below use raw scalar loops (no Eigen reductions) so they count as
// independent re-computations of what the library computes.
namespace th {

inline eebf::SystemParams small_params(int M, int K, int Nt, double p_budget_w,
                                       double rho = 0.0) {
  eebf::SystemParams sp = eebf::SystemParams::make(M, K, Nt, p_budget_w);
  sp.corr_rho = rho;
  return sp;
}

// One random scenario: drop + fading realization from a single seed.
inline eebf::ChannelSet random_channels(const eebf::SystemParams& sp, std::uint64_t seed) {
  const eebf::CellGeometry geo{};
  const eebf::UserDrop drop =
      eebf::generate_user_drop(geo, sp.cells, sp.users_per_cell, seed);
  return eebf::generate_channels(drop, sp, seed ^ 0x9e3779b97f4a7c15ULL);
}

inline std::complex<double> inner_product(const Eigen::VectorXcd& h, const Eigen::VectorXcd& v) {
  std::complex<double> acc{0.0, 0.0};
  for (Eigen::Index i = 0; i < h.size(); ++i) acc += std::conj(h(i)) * v(i);
  return acc;
}

inline double gain(const Eigen::VectorXcd& h, const Eigen::VectorXcd& v) {
  const std::complex<double> a = inner_product(h, v);
  return a.real() * a.real() + a.imag() * a.imag();
}

inline double sinr_reference(const eebf::ChannelSet& cs, const eebf::BeamformerSet& b, int j,
                             int k, double sigma2) {
  const double desired = gain(cs.of(j, j, k), b.at(j, k));
  double interference = 0.0;
  for (int m = 0; m < cs.cells; ++m)
    for (int n = 0; n < cs.users_per_cell; ++n) {
      if (m == j && n == k) continue;
      interference += gain(cs.of(m, j, k), b.at(m, n));
    }
  return desired / (interference + sigma2);
}

inline double wsr_reference(const eebf::ChannelSet& cs, const eebf::BeamformerSet& b,
                            const Eigen::MatrixXd& weights, double sigma2) {
  double wsr = 0.0;
  for (int j = 0; j < cs.cells; ++j)
    for (int k = 0; k < cs.users_per_cell; ++k)
      wsr += weights(j, k) * std::log2(1.0 + sinr_reference(cs, b, j, k, sigma2));
  return wsr;
}

inline double total_power_reference(const eebf::BeamformerSet& b,
                                    const eebf::SystemParams& sp) {
  double tx = 0.0;
  for (const auto& v : b.v)
    for (Eigen::Index i = 0; i < v.size(); ++i)
      tx += v(i).real() * v(i).real() + v(i).imag() * v(i).imag();
  return sp.amp_inefficiency * tx + sp.cells * (sp.tx_antennas * sp.circuit_power_w +
                                                sp.static_power_w);
}

// |<a,b>| / (||a|| ||b||), 1 iff collinear.
inline double collinearity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::abs(inner_product(a, b)) / (a.norm() * b.norm());
}

inline double max_bs_power_violation(const eebf::BeamformerSet& b,
                                     const eebf::SystemParams& sp) {
  double worst = 0.0;
  for (int j = 0; j < sp.cells; ++j)
    worst = std::max(worst,
                     (b.bs_power(j) - sp.power_budget_w(j)) / sp.power_budget_w(j));
  return worst;
}

}  // namespace th
