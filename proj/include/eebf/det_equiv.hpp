#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "eebf/channel.hpp"
#include "eebf/common.hpp"
#include "eebf/system_params.hpp"

// Deterministic equivalents of the resolvent quantities that appear in the
// large-system analysis of regularized-inverse beamforming. All channels share
// one transmit correlation R, so every trace here is a rational function of
// R's eigenvalues and reduces to an O(N_t) spectral sum. Trace normalization
// convention throughout: tau(X) := tr(X) / N_t.
namespace eebf {

// Eigendecomposition of R, computed once per scenario and shared.
struct RSpectrum {
  Eigen::MatrixXd basis;        // U, orthonormal
  Eigen::VectorXd eigenvalues;  // clamped to >= 0; sums to N_t for unit-diag R

  int dim() const { return static_cast<int>(eigenvalues.size()); }

  static RSpectrum from(const Eigen::MatrixXd& R) {
    require(R.rows() == R.cols() && R.rows() >= 1, "spectrum: R must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    require(es.info() == Eigen::Success, "spectrum: eigendecomposition failed");
    RSpectrum s;
    s.basis = es.eigenvectors();
    s.eigenvalues = es.eigenvalues().cwiseMax(0.0);
    return s;
  }
};

// Loading multiset S = {s_i} with regularizer rho = lambda_j / N_t. Repeated
// and zero values keep their slots (cardinality is meaningful).
struct LoadingSet {
  Eigen::VectorXd s;
  double rho = 0.0;
  std::shared_ptr<const RSpectrum> spectrum;

  int size() const { return static_cast<int>(s.size()); }
  int dim() const { return spectrum->dim(); }
};

inline LoadingSet make_loading(Eigen::VectorXd s, double rho,
                               std::shared_ptr<const RSpectrum> spectrum) {
  require(spectrum != nullptr, "loading: spectrum required");
  require((s.array() >= 0).all(), "loading: entries must be nonnegative");
  require(rho >= 0.0, "loading: rho must be nonnegative");
  return LoadingSet{std::move(s), rho, std::move(spectrum)};
}

namespace detail {

// c(e) = (1/N_t) sum_i s_i / (1 + e_i): the loading scalar that places
// phi = (c R + rho I)^{-1} in R's eigenbasis.
inline double loading_scalar(const Eigen::VectorXd& s, const Eigen::VectorXd& e, int nt) {
  double c = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) c += s(i) / (1.0 + e(i));
  return c / nt;
}

// tau(R^a phi^b)-style spectral sums for phi = (cR + rho I)^{-1}
inline double tau_r_phi(const RSpectrum& sp, double c, double rho) {
  double acc = 0;
  for (double l : sp.eigenvalues) acc += l / (c * l + rho);
  return acc / sp.dim();
}
inline double tau_r_phi2(const RSpectrum& sp, double c, double rho) {
  double acc = 0;
  for (double l : sp.eigenvalues) acc += l / ((c * l + rho) * (c * l + rho));
  return acc / sp.dim();
}
inline double tau_r2_phi2(const RSpectrum& sp, double c, double rho) {
  double acc = 0;
  for (double l : sp.eigenvalues) acc += l * l / ((c * l + rho) * (c * l + rho));
  return acc / sp.dim();
}
inline double tau_r3_phi2(const RSpectrum& sp, double c, double rho) {
  double acc = 0;
  for (double l : sp.eigenvalues) acc += l * l * l / ((c * l + rho) * (c * l + rho));
  return acc / sp.dim();
}

}  // namespace detail

struct FixedPointOptions {
  double tol = 1e-10;   // on the normalized residual max_i |e_i - rhs_i| / (1 + e_i)
  int max_iters = 10000;
  double damping = 0.5;
};

class FixedPointError : public std::runtime_error {
 public:
  FixedPointError(const std::string& msg, double residual)
      : std::runtime_error(msg), last_residual(residual) {}
  double last_residual;
};

// Solve e_i = s_i * tau(R phi(S, rho)), phi = ((1/N_t) sum_i s_i R/(1+e_i) + rho I)^{-1},
// by damped Picard iteration from e = 1. For rho > 0 the positive solution is
// unique; rho = 0 is tolerated when the loading term alone is invertible
// (divergence is caught by the iteration cap).
inline Eigen::VectorXd solve_fixed_point(const LoadingSet& L, FixedPointOptions opt = {}) {
  const int n = L.size();
  if (n == 0) {
    require(L.rho > 0, "fixed point: empty loading needs rho > 0");
    return Eigen::VectorXd();
  }
  const RSpectrum& sp = *L.spectrum;
  Eigen::VectorXd e = Eigen::VectorXd::Ones(n);
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iters; ++it) {
    const double c = detail::loading_scalar(L.s, e, sp.dim());
    if (c <= 0 && L.rho <= 0)
      throw FixedPointError("fixed point: singular loading (c = 0 with rho = 0)", resid);
    const double t = detail::tau_r_phi(sp, c, L.rho);
    resid = 0;
    for (int i = 0; i < n; ++i)
      resid = std::max(resid, std::abs(e(i) - L.s(i) * t) / (1.0 + e(i)));
    if (resid <= opt.tol) return e;
    for (int i = 0; i < n; ++i)
      e(i) = (1.0 - opt.damping) * e(i) + opt.damping * L.s(i) * t;
  }
  throw FixedPointError("fixed point: no convergence in max_iters", resid);
}

// phi(S, rho) as a matrix (real symmetric; shares R's eigenbasis).
inline Eigen::MatrixXd phi_matrix(const LoadingSet& L, const Eigen::VectorXd& e) {
  const RSpectrum& sp = *L.spectrum;
  const double c = L.size() == 0 ? 0.0 : detail::loading_scalar(L.s, e, sp.dim());
  Eigen::VectorXd d(sp.dim());
  for (int r = 0; r < sp.dim(); ++r) d(r) = 1.0 / (c * sp.eigenvalues(r) + L.rho);
  return sp.basis * d.asDiagonal() * sp.basis.transpose();
}

// Derivative system for e' = -de/drho. The coupling matrix
//   [J]_{ij} = s_i s_j tau(R phi R phi) / (N_t (1+e_j)^2)
// is exactly rank one, so (I - J) e' = v is solved in closed form; the
// spectral-radius condition is the scalar b.a < 1.
inline Eigen::VectorXd solve_e_prime(const LoadingSet& L, const Eigen::VectorXd& e) {
  const int n = L.size();
  if (n == 0) return Eigen::VectorXd();
  const RSpectrum& sp = *L.spectrum;
  const double c = detail::loading_scalar(L.s, e, sp.dim());
  const double t_r_phi2 = detail::tau_r_phi2(sp, c, L.rho);
  const double t_r2_phi2 = detail::tau_r2_phi2(sp, c, L.rho);

  Eigen::VectorXd v(n), a(n), b(n);
  for (int i = 0; i < n; ++i) {
    v(i) = L.s(i) * t_r_phi2;
    a(i) = L.s(i) * t_r2_phi2 / sp.dim();
    b(i) = L.s(i) / ((1.0 + e(i)) * (1.0 + e(i)));
  }
  const double radius = b.dot(a);  // spectral radius of rank-1 J = a b^T
  if (!(radius < 1.0))
    throw std::runtime_error("e' system: coupling matrix spectral radius >= 1");
  Eigen::VectorXd ep = v + a * (b.dot(v) / (1.0 - radius));

  // verify (I - J) e' = v using the rank-1 structure
  const double bv = b.dot(ep);
  double resid = 0, scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < n; ++i) resid = std::max(resid, std::abs(ep(i) - a(i) * bv - v(i)));
  if (resid > 1e-10 * scale)
    throw std::runtime_error("e' system: linear solve residual too large");
  return ep;
}

// phi'(S, rho) = phi (I + (1/N_t) sum_i s_i e'_i R/(1+e_i)^2) phi; equals
// -d phi/d rho and dominates phi^2 in the PSD order.
inline Eigen::MatrixXd phi_prime_matrix(const LoadingSet& L, const Eigen::VectorXd& e,
                                        const Eigen::VectorXd& e_prime) {
  const RSpectrum& sp = *L.spectrum;
  double c = 0, cp = 0;
  if (L.size() > 0) {
    c = detail::loading_scalar(L.s, e, sp.dim());
    for (int i = 0; i < L.size(); ++i)
      cp += L.s(i) * e_prime(i) / ((1.0 + e(i)) * (1.0 + e(i)));
    cp /= sp.dim();
  }
  Eigen::VectorXd d(sp.dim());
  for (int r = 0; r < sp.dim(); ++r) {
    const double l = sp.eigenvalues(r);
    const double denom = c * l + L.rho;
    d(r) = (1.0 + cp * l) / (denom * denom);
  }
  return sp.basis * d.asDiagonal() * sp.basis.transpose();
}

struct ResolventSolution {
  Eigen::VectorXd e;
  Eigen::VectorXd e_prime;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd phi_prime;
};

inline ResolventSolution solve_resolvent(const LoadingSet& L, FixedPointOptions opt = {}) {
  ResolventSolution sol;
  sol.e = solve_fixed_point(L, opt);
  sol.e_prime = solve_e_prime(L, sol.e);
  sol.phi = phi_matrix(L, sol.e);
  sol.phi_prime = phi_prime_matrix(L, sol.e, sol.e_prime);
  return sol;
}

namespace detail {

// Scalar outputs of one resolvent solve: everything the gain matrix needs,
// without materializing phi. tau(R phi) = g1, tau(R phi') = g2 + c' g2b,
// tau(R^2 phi') = g2b + c' g2c.
struct ResolventScalars {
  double tau_r_phi = 0;
  double tau_r_phiprime = 0;
  double tau_r2_phiprime = 0;
};

inline ResolventScalars resolvent_scalars(const LoadingSet& L, FixedPointOptions opt = {}) {
  const RSpectrum& sp = *L.spectrum;
  ResolventScalars out;
  if (L.size() == 0) {
    require(L.rho > 0, "resolvent: empty loading needs rho > 0");
    double g1 = 0, g2 = 0, g2b = 0;
    for (double l : sp.eigenvalues) {
      g1 += l / L.rho;
      g2 += l / (L.rho * L.rho);
      g2b += l * l / (L.rho * L.rho);
    }
    out.tau_r_phi = g1 / sp.dim();
    out.tau_r_phiprime = g2 / sp.dim();    // phi' = phi^2 when S is empty
    out.tau_r2_phiprime = g2b / sp.dim();
    return out;
  }
  const Eigen::VectorXd e = solve_fixed_point(L, opt);
  const Eigen::VectorXd ep = solve_e_prime(L, e);
  const double c = loading_scalar(L.s, e, sp.dim());
  double cp = 0;
  for (int i = 0; i < L.size(); ++i) cp += L.s(i) * ep(i) / ((1.0 + e(i)) * (1.0 + e(i)));
  cp /= sp.dim();
  out.tau_r_phi = tau_r_phi(sp, c, L.rho);
  out.tau_r_phiprime = tau_r_phi2(sp, c, L.rho) + cp * tau_r2_phi2(sp, c, L.rho);
  out.tau_r2_phiprime = tau_r2_phi2(sp, c, L.rho) + cp * tau_r3_phi2(sp, c, L.rho);
  return out;
}

}  // namespace detail

// Deterministic gain matrix of the regularized-inverse beam family
//   vbar_{j,k} = normalize( (sum_{m,n} beta_{m,n} h_{j,m,n} h^H + lambda_j I)^{-1} h_{j,j,k} ).
// Row = transmitting pair (j,k), column = receiving user (m,n):
//   G(q,q)   -> deterministic equivalent of |h_{j,j,k}^H vbar_{j,k}|^2
//   G(q,q')  -> deterministic equivalent of |h_{j,m,n}^H vbar_{j,k}|^2.
struct DetGainMatrix {
  Eigen::MatrixXd G;           // MK x MK
  Eigen::MatrixXd m_direct;    // M x K
  Eigen::MatrixXd psi_direct;  // M x K
  Eigen::MatrixXd m_cross;     // MK x MK (diagonal unused)
  Eigen::MatrixXd psi_cross;   // MK x MK (diagonal unused)
};

inline DetGainMatrix build_det_gain_matrix(const Eigen::MatrixXd& beta,
                                           const Eigen::VectorXd& lambda,
                                           const Eigen::MatrixXd& epsilon,
                                           const SystemParams& params,
                                           std::shared_ptr<const RSpectrum> spectrum,
                                           FixedPointOptions opt = {}) {
  const int M = params.cells, K = params.users_per_cell, Nt = params.tx_antennas;
  require(beta.rows() == M && beta.cols() == K, "det gain: beta must be M x K");
  require((beta.array() >= 0).all(), "det gain: beta must be nonnegative");
  require(lambda.size() == M, "det gain: lambda must have one entry per cell");
  require(epsilon.rows() == M && epsilon.cols() == M * K, "det gain: epsilon must be M x MK");
  require(spectrum && spectrum->dim() == Nt, "det gain: spectrum dimension mismatch");
  const int MK = M * K;

  DetGainMatrix out;
  out.G = Eigen::MatrixXd::Zero(MK, MK);
  out.m_direct = Eigen::MatrixXd::Zero(M, K);
  out.psi_direct = Eigen::MatrixXd::Zero(M, K);
  out.m_cross = Eigen::MatrixXd::Zero(MK, MK);
  out.psi_cross = Eigen::MatrixXd::Zero(MK, MK);

  // flattened beta over pairs q = (m,n)
  Eigen::VectorXd beta_flat(MK);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < K; ++n) beta_flat(user_index(m, n, K)) = beta(m, n);

  for (int j = 0; j < M; ++j) {
    require(lambda(j) >= 0, "det gain: lambda must be nonnegative");
    const double rho = lambda(j) / Nt;
    // full loading at BS j: s_q = eps(j,q) * beta_q, |S| = MK
    Eigen::VectorXd s_full(MK);
    for (int q = 0; q < MK; ++q) s_full(q) = epsilon(j, q) * beta_flat(q);

    for (int k = 0; k < K; ++k) {
      const int q0 = user_index(j, k, K);
      const double eps_own = epsilon(j, q0);
      if (eps_own <= 0) continue;  // zero channel: degenerate row stays zero

      // leave-own-out loading, |S| = MK - 1
      Eigen::VectorXd s1(MK - 1);
      for (int q = 0, w = 0; q < MK; ++q)
        if (q != q0) s1(w++) = s_full(q);
      const LoadingSet L1{s1, rho, spectrum};
      const auto r1 = detail::resolvent_scalars(L1, opt);

      const double m_dir = eps_own * r1.tau_r_phi;
      const double psi_dir = eps_own * r1.tau_r_phiprime;
      out.m_direct(j, k) = m_dir;
      out.psi_direct(j, k) = psi_dir;
      // normalized desired power: N_t m^2 / Psi in the tau convention
      out.G(q0, q0) = Nt * m_dir * m_dir / psi_dir;

      // leave-two-out sets, |S| = MK - 2, one per victim pair
      Eigen::VectorXd s2(MK - 2);
      for (int q1 = 0; q1 < MK; ++q1) {
        if (q1 == q0) continue;
        for (int q = 0, w = 0; q < MK; ++q)
          if (q != q0 && q != q1) s2(w++) = s_full(q);
        const LoadingSet L2{s2, rho, spectrum};
        const auto r2 = detail::resolvent_scalars(L2, opt);
        const double m_cr = epsilon(j, q1) * r2.tau_r_phi;
        const double psi_cr = eps_own * epsilon(j, q1) * r2.tau_r2_phiprime;
        out.m_cross(q0, q1) = m_cr;
        out.psi_cross(q0, q1) = psi_cr;
        const double denom = 1.0 + beta_flat(q1) * m_cr;
        out.G(q0, q1) = psi_cr / (denom * denom * psi_dir);
      }
    }
  }
  return out;
}

inline DetGainMatrix build_det_gain_matrix(const Eigen::MatrixXd& beta,
                                           const Eigen::VectorXd& lambda,
                                           const Eigen::MatrixXd& epsilon,
                                           const SystemParams& params,
                                           FixedPointOptions opt = {}) {
  auto spectrum = std::make_shared<RSpectrum>(
      RSpectrum::from(correlation_matrix(params.corr_rho, params.tx_antennas)));
  return build_det_gain_matrix(beta, lambda, epsilon, params, std::move(spectrum), opt);
}

struct DetPerformance {
  Eigen::MatrixXd sinr;  // M x K deterministic SINRs
  double wsr = 0;        // bits per channel use
  double ee = 0;         // per channel use: (bits/use) / watt
};

// Deterministic rates/EE for powers p laid on top of the normalized beam
// family described by G.
inline DetPerformance det_performance(const DetGainMatrix& gm, const Eigen::MatrixXd& p,
                                      const Eigen::MatrixXd& weights,
                                      const SystemParams& params) {
  const int M = params.cells, K = params.users_per_cell;
  require(p.rows() == M && p.cols() == K, "det perf: p must be M x K");
  require((p.array() >= 0).all(), "det perf: powers must be nonnegative");
  DetPerformance out;
  out.sinr.resize(M, K);
  double ptx = 0;
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < K; ++k) {
      const int q0 = user_index(j, k, K);
      const double des = gm.G(q0, q0) * p(j, k);
      double intf = 0;
      for (int m = 0; m < M; ++m)
        for (int n = 0; n < K; ++n) {
          const int q = user_index(m, n, K);
          if (q == q0) continue;
          intf += gm.G(q, q0) * p(m, n);
        }
      out.sinr(j, k) = des / (intf + params.noise_power_w);
      out.wsr += weights(j, k) * std::log2(1.0 + out.sinr(j, k));
      ptx += p(j, k);
    }
  out.ee = out.wsr / (params.amp_inefficiency * ptx + params.fixed_power_w());
  return out;
}

}  // namespace eebf
