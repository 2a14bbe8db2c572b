#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "eebf/metrics.hpp"

// Per-realization energy-efficiency maximization: a Dinkelbach-style bisection
// on the EE level eta, with a weighted-MMSE block-coordinate ascent solving the
// parametric inner problem  max_v  sum w log2(1+SINR) - eta * zeta * sum ||v||^2
// subject to per-BS power budgets.
namespace eebf {

struct WmmseOptions {
  double inner_tol = 1e-6;   // relative change of the inner objective
  int inner_max_iters = 200;
  double mu_tol = 1e-10;     // relative power mismatch for the multiplier bisection
};

// MMSE receivers and MSE weights for fixed beams:
//   u_{j,k} = conj(h_{j,j,k}^H v_{j,k}) / (sum_{m,n} |h_{m,j,k}^H v_{m,n}|^2 + sigma^2)
//   s_{j,k} = 1 / (1 - u_{j,k} h_{j,j,k}^H v_{j,k}) = 1 + SINR_{j,k}
struct Receivers {
  Eigen::MatrixXcd u;
  Eigen::MatrixXd s;
};

inline Receivers update_receivers(const ChannelSet& cs, const BeamformerSet& b, double sigma2) {
  require(sigma2 > 0, "receivers: noise power must be positive");
  const int M = cs.cells, K = cs.users_per_cell;
  Receivers r;
  r.u.resize(M, K);
  r.s.resize(M, K);
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < K; ++k) {
      const Cplx a = cs.of(j, j, k).dot(b.at(j, k));  // h^H v
      double total = sigma2;
      for (int m = 0; m < M; ++m)
        for (int n = 0; n < K; ++n) total += std::norm(cs.of(m, j, k).dot(b.at(m, n)));
      const Cplx u = std::conj(a) / total;
      const double s = 1.0 / (1.0 - std::real(u * a));
      if (!std::isfinite(s) || s < 1.0 - 1e-12)
        throw std::runtime_error("receivers: non-finite MSE weight");
      r.u(j, k) = u;
      r.s(j, k) = s;
    }
  return r;
}

namespace detail {

// Per-BS beam solver for fixed receivers. The update matrix
//   A_j = sum_{m,n} w s |u|^2 h_{j,m,n} h_{j,m,n}^H
// is eigendecomposed once, after which beams and transmit power at any
// multiplier mu cost O(K N_t). theta is the power-penalty part of the
// regularizer (the log2-rate objective meets a natural-log MSE surrogate, so
// eta*zeta picks up a factor ln 2).
class BsBeamSolver {
 public:
  BsBeamSolver(const ChannelSet& cs, int j, const Receivers& r, const Eigen::MatrixXd& weights,
               double theta)
      : nt_(cs.tx_antennas), k_(cs.users_per_cell), theta_(theta) {
    const int M = cs.cells, K = cs.users_per_cell;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(nt_, nt_);
    bool any = false;
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < K; ++n) {
        const double coef = weights(m, n) * r.s(m, n) * std::norm(r.u(m, n));
        if (coef <= 0) continue;
        A.selfadjointView<Eigen::Lower>().rankUpdate(cs.of(j, m, n), coef);
        any = true;
      }
    trace_a_ = any ? A.real().trace() : 0.0;
    if (any) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
      require(es.info() == Eigen::Success, "beam solver: eigendecomposition failed");
      q_ = es.eigenvectors();
      lam_ = es.eigenvalues().cwiseMax(0.0);
    } else {
      q_ = Eigen::MatrixXcd::Identity(nt_, nt_);
      lam_ = Eigen::VectorXd::Zero(nt_);
    }
    c_.resize(k_);
    for (int k = 0; k < k_; ++k) {
      const Eigen::VectorXcd bvec =
          weights(j, k) * r.s(j, k) * std::conj(r.u(j, k)) * cs.of(j, j, k);
      c_[k] = q_.adjoint() * bvec;
    }
  }

  // sum_k ||v_k(mu)||^2; strictly decreasing in mu wherever positive
  double power_at(double mu) const {
    const double floor = reg_floor(mu);
    double p = 0;
    for (const auto& c : c_)
      for (int r = 0; r < nt_; ++r) {
        const double d = lam_(r) + theta_ + mu + floor;
        const double mag = std::abs(c(r));
        if (mag > 0) p += (mag * mag) / (d * d);
      }
    return p;
  }

  std::vector<Eigen::VectorXcd> beams_at(double mu) const {
    const double floor = reg_floor(mu);
    std::vector<Eigen::VectorXcd> v(k_);
    for (int k = 0; k < k_; ++k) {
      Eigen::VectorXcd y(nt_);
      for (int r = 0; r < nt_; ++r) y(r) = c_[k](r) / (lam_(r) + theta_ + mu + floor);
      v[k] = q_ * y;
    }
    return v;
  }

  bool all_zero() const {
    for (const auto& c : c_)
      if (c.norm() > 0) return false;
    return true;
  }

 private:
  // When the regularizer vanishes exactly and A is singular, a tiny ridge
  // proportional to tr(A)/N_t keeps the solve defined.
  double reg_floor(double mu) const {
    if (theta_ + mu > 0) return 0.0;
    return 1e-12 * trace_a_ / nt_;
  }

  int nt_, k_;
  double theta_;
  double trace_a_ = 0;
  Eigen::MatrixXcd q_;
  Eigen::VectorXd lam_;
  std::vector<Eigen::VectorXcd> c_;
};

}  // namespace detail

// Beam update for fixed receivers, with a per-BS multiplier found by bisection
// whenever the unconstrained update exceeds the budget.
inline std::pair<BeamformerSet, Eigen::VectorXd> update_beamformers(
    const ChannelSet& cs, const Receivers& r, const Eigen::MatrixXd& weights, double eta,
    const SystemParams& params, double mu_tol = 1e-10) {
  require(eta >= 0, "beam update: eta must be nonnegative");
  const int M = cs.cells, K = cs.users_per_cell, Nt = cs.tx_antennas;
  const double theta = eta * params.amp_inefficiency * kLn2;

  BeamformerSet out = BeamformerSet::zeros(M, K, Nt);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(M);
  for (int j = 0; j < M; ++j) {
    const detail::BsBeamSolver solver(cs, j, r, weights, theta);
    if (solver.all_zero()) continue;  // all receivers silent: zero beams
    const double pj = params.power_budget_w(j);
    double mj = 0.0;
    if (!(solver.power_at(0.0) <= pj)) {
      double hi = 1.0;
      int guard = 0;
      while (solver.power_at(hi) > pj) {
        hi *= 2.0;
        require(++guard < 200, "beam update: multiplier bracket failed");
      }
      double lo = hi > 1.0 ? hi / 2.0 : 0.0;
      for (int it = 0; it < 200; ++it) {
        mj = 0.5 * (lo + hi);
        const double p = solver.power_at(mj);
        if (std::abs(p - pj) <= mu_tol * pj) break;
        (p > pj ? lo : hi) = mj;
      }
      if (std::abs(solver.power_at(mj) - pj) > mu_tol * pj) mj = hi;  // feasible endpoint
    }
    mu(j) = mj;
    auto beams = solver.beams_at(mj);
    for (int k = 0; k < K; ++k) out.at(j, k) = std::move(beams[k]);
  }
  return {std::move(out), std::move(mu)};
}

// Inner objective G_eta(v) = sum w log2(1+SINR) - eta * zeta * sum ||v||^2, in bits.
inline double inner_objective(const ChannelSet& cs, const BeamformerSet& b,
                              const Eigen::MatrixXd& weights, double eta,
                              const SystemParams& params) {
  return weighted_sum_rate(cs, b, weights, params.noise_power_w) -
         eta * params.amp_inefficiency * b.transmit_power();
}

struct InnerResult {
  BeamformerSet v;
  Eigen::VectorXd mu;
  double objective = 0;        // final G_eta(v)
  double F = 0;                // objective - eta * fixed power; >= 0 iff EE(v) >= eta
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;   // objective after each full iteration
};

// Block-coordinate ascent on G_eta from a given starting point. Each full
// iteration (receivers, then beams) is a majorize-minimize step, so the
// objective trace is nondecreasing up to rounding.
inline InnerResult inner_solve(const ChannelSet& cs, const Eigen::MatrixXd& weights, double eta,
                               const SystemParams& params, const BeamformerSet& init,
                               WmmseOptions opt = {}) {
  params.validate();
  for (const auto& hv : cs.h)
    require(hv.allFinite(), "inner solve: non-finite channel value");
  InnerResult res;
  res.v = init;
  double prev = inner_objective(cs, res.v, weights, eta, params);
  res.trace.push_back(prev);
  for (int it = 1; it <= opt.inner_max_iters; ++it) {
    const Receivers r = update_receivers(cs, res.v, params.noise_power_w);
    auto [v, mu] = update_beamformers(cs, r, weights, eta, params, opt.mu_tol);
    res.v = std::move(v);
    res.mu = std::move(mu);
    const double obj = inner_objective(cs, res.v, weights, eta, params);
    res.trace.push_back(obj);
    res.iterations = it;
    if (std::abs(obj - prev) <= opt.inner_tol * std::max(1.0, std::abs(obj))) {
      res.converged = true;
      prev = obj;
      break;
    }
    prev = obj;
  }
  res.objective = prev;
  res.F = prev - eta * params.fixed_power_w();
  return res;
}

// Finite upper bound on achievable EE (per channel use): interference-free
// rates at full per-user power over the fixed power term alone.
inline double eta_max_finite(const ChannelSet& cs, const Eigen::MatrixXd& weights,
                             const SystemParams& params) {
  double num = 0;
  for (int j = 0; j < cs.cells; ++j)
    for (int k = 0; k < cs.users_per_cell; ++k)
      num += weights(j, k) *
             std::log2(1.0 + params.power_budget_w(j) * cs.of(j, j, k).squaredNorm() /
                                 params.noise_power_w);
  return num / params.fixed_power_w();
}

struct DinkelbachOptions {
  double delta_rel = 1e-4;  // bracket width target, relative to eta_max
  int max_outer_iters = 60;
  WmmseOptions inner;
};

struct DinkelbachTraceRow {
  int outer_iter;
  double eta_lo, eta_hi, eta;
  double F;
  int inner_iters;
  double inner_objective;
};

struct DinkelbachResult {
  double eta_star = 0;  // EE (per channel use) of the returned beams
  BeamformerSet v;
  double eta_lo = 0, eta_hi = 0;
  int outer_iters = 0;
  long total_inner_iters = 0;
};

// Bisection on eta: F(eta) = max_v G_eta(v) - eta * fixed power is
// nonincreasing with a sign change at the optimal EE. Inner solves are
// warm-started from the best feasible beams, which also guarantees that
// the certified bracket contains EE(v*).
inline DinkelbachResult dinkelbach_solve(const ChannelSet& cs, const Eigen::MatrixXd& weights,
                                         const SystemParams& params, const BeamformerSet& init,
                                         DinkelbachOptions opt = {},
                                         std::vector<DinkelbachTraceRow>* trace = nullptr) {
  params.validate();
  DinkelbachResult res;
  res.v = init;
  const double eta_max = eta_max_finite(cs, weights, params);
  if (!(eta_max > 0)) {  // no positive rate achievable at all
    res.v = BeamformerSet::zeros(cs.cells, cs.users_per_cell, cs.tx_antennas);
    return res;
  }
  double lo = 0.0, hi = eta_max;
  const double delta = opt.delta_rel * eta_max;
  BeamformerSet best = init;  // feasible-side beams (F >= 0 side)
  for (int it = 1; it <= opt.max_outer_iters && hi - lo > delta; ++it) {
    const double eta = 0.5 * (lo + hi);
    const InnerResult inner = inner_solve(cs, weights, eta, params, best, opt.inner);
    res.total_inner_iters += inner.iterations;
    res.outer_iters = it;
    if (trace)
      trace->push_back({it, lo, hi, eta, inner.F, inner.iterations, inner.objective});
    if (inner.F >= 0) {
      lo = eta;
      best = inner.v;
    } else {
      hi = eta;
    }
  }
  res.eta_lo = lo;
  res.eta_hi = hi;
  res.v = best;
  res.eta_star = energy_efficiency_per_cu(cs, res.v, weights, params);
  return res;
}

}  // namespace eebf
