#pragma once

#include <Eigen/Dense>

#include "eebf/common.hpp"

namespace eebf {

// Static scenario description for the multi-cell MISO downlink. All power
// quantities are linear watts; dBm conversion happens once at config parsing.
struct SystemParams {
  int cells = 1;           // M coordinated base stations
  int users_per_cell = 1;  // K single-antenna users served per cell
  int tx_antennas = 1;     // N_t antennas per base station

  Eigen::VectorXd power_budget_w;  // per-BS transmit budget P_j, length M
  double circuit_power_w = 1.0;    // P_c, per active antenna
  double static_power_w = 10.0;    // P_0, per base station
  double amp_inefficiency = 2.0;   // zeta >= 1, PA inefficiency multiplier
  double noise_power_w = 3.9810717055349694e-13;  // sigma^2 (-94 dBm default)

  Eigen::MatrixXd weights;  // rate weights w_{j,k}, M x K, all > 0
  double corr_rho = 0.0;    // transmit correlation coefficient in [0, 1)
  double bandwidth_hz = 20e6;  // only used when reporting rates/EE in bits/s

  int total_users() const { return cells * users_per_cell; }

  // Beam-independent term of the power model: M * (N_t*P_c + P_0)
  double fixed_power_w() const {
    return cells * (tx_antennas * circuit_power_w + static_power_w);
  }

  void validate() const {
    require(cells >= 1, "params: cells must be >= 1");
    require(users_per_cell >= 1, "params: users_per_cell must be >= 1");
    require(tx_antennas >= 1, "params: tx_antennas must be >= 1");
    require(power_budget_w.size() == cells, "params: power budget must have one entry per cell");
    require((power_budget_w.array() > 0).all(), "params: power budgets must be positive");
    require(circuit_power_w > 0, "params: circuit power must be positive");
    require(static_power_w > 0, "params: static power must be positive");
    require(amp_inefficiency >= 1.0, "params: amplifier inefficiency must be >= 1");
    require(noise_power_w > 0, "params: noise power must be positive");
    require(weights.rows() == cells && weights.cols() == users_per_cell,
            "params: weights must be cells x users_per_cell");
    require((weights.array() > 0).all(), "params: weights must be positive");
    require(corr_rho >= 0.0 && corr_rho < 1.0, "params: correlation rho must lie in [0, 1)");
    require(bandwidth_hz > 0, "params: bandwidth must be positive");
  }

  // Convenience factory with equal budgets and unit weights.
  static SystemParams make(int M, int K, int Nt, double p_budget_w) {
    SystemParams sp;
    sp.cells = M;
    sp.users_per_cell = K;
    sp.tx_antennas = Nt;
    sp.power_budget_w = Eigen::VectorXd::Constant(M, p_budget_w);
    sp.weights = Eigen::MatrixXd::Ones(M, K);
    return sp;
  }
};

}  // namespace eebf
