#include "helpers.hpp"

using namespace eebf;
using Catch::Approx;

TEST_CASE("pathloss follows the log-distance rule", "[core]") {
  // -(38 log10 d + 34.5) dB at the two distance extremes of the cell
  CHECK(pathloss_db(35.0) == Approx(-93.17458568531048).epsilon(1e-12));
  CHECK(pathloss_db(500.0) == Approx(-137.06086016476872).epsilon(1e-12));
  CHECK(pathloss_linear(35.0) ==
        Approx(std::pow(10.0, -93.17458568531048 / 10.0)).epsilon(1e-12));
  CHECK_THROWS_AS(pathloss_db(0.0), std::invalid_argument);
  CHECK_THROWS_AS(pathloss_db(-1.0), std::invalid_argument);
}

TEST_CASE("exponential correlation matrix", "[core]") {
  SECTION("rho = 0 is the identity") {
    const Eigen::MatrixXd r = correlation_matrix(0.0, 4);
    CHECK((r - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("rho = 0.5, n = 2 is filled directly") {
    const Eigen::MatrixXd r = correlation_matrix(0.5, 2);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(1, 1) == 1.0);
    CHECK(r(0, 1) == 0.5);
    CHECK(r(1, 0) == 0.5);
  }
  SECTION("strong correlation stays positive definite") {
    const Eigen::MatrixXd r = correlation_matrix(0.9, 8);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 8; ++i) CHECK(r(i, i) == 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
    REQUIRE(es.info() == Eigen::Success);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  SECTION("rho outside [0,1) is rejected") {
    CHECK_THROWS_AS(correlation_matrix(1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(correlation_matrix(-0.1, 4), std::invalid_argument);
  }
}

TEST_CASE("user drops honor the cell geometry", "[core]") {
  const CellGeometry geo{};
  const int M = 3, K = 5;
  const UserDrop drop = generate_user_drop(geo, M, K, 11);

  REQUIRE(drop.bs_pos.rows() == M);
  REQUIRE(drop.user_pos.rows() == M * K);
  REQUIRE(drop.epsilon.rows() == M);
  REQUIRE(drop.epsilon.cols() == M * K);

  for (int j = 0; j < M; ++j)
    for (int k = 0; k < K; ++k) {
      const int q = user_index(j, k, K);
      const Eigen::Vector2d p = drop.user_pos.row(q).transpose();
      // inside the serving hexagon (circumradius bound suffices here)
      CHECK((p - Eigen::Vector2d(drop.bs_pos.row(j))).norm() <= geo.radius_m + 1e-9);
      for (int m = 0; m < M; ++m) {
        const double d = (p - Eigen::Vector2d(drop.bs_pos.row(m))).norm();
        CHECK(d >= geo.min_dist_m - 1e-9);
        CHECK(drop.epsilon(m, q) == Approx(pathloss_linear(d)).epsilon(1e-12));
        CHECK(drop.epsilon(m, q) > 0.0);
      }
    }

  SECTION("same seed reproduces the drop, different seed does not") {
    const UserDrop again = generate_user_drop(geo, M, K, 11);
    CHECK((again.user_pos - drop.user_pos).cwiseAbs().maxCoeff() == 0.0);
    CHECK((again.epsilon - drop.epsilon).cwiseAbs().maxCoeff() == 0.0);
    const UserDrop other = generate_user_drop(geo, M, K, 12);
    CHECK((other.user_pos - drop.user_pos).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("adjacent hexagonal cells form a compact cluster", "[core]") {
  const double R = 500.0;
  const auto centers = hex_centers(3, R);
  REQUIRE(centers.size() == 3);
  // all three pairwise distances equal the lattice constant sqrt(3) R
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      CHECK((centers[a] - centers[b]).norm() == Approx(std::sqrt(3.0) * R).epsilon(1e-12));
}

TEST_CASE("channel realizations have the configured statistics", "[core][statistics]") {
  SECTION("uncorrelated entries have unit variance") {
    SystemParams sp = th::small_params(1, 1, 4, 1.0);
    const UserDrop drop = generate_user_drop(CellGeometry{}, 1, 1, 21);
    const int n_draws = 10000;
    double acc = 0.0;
    for (int d = 0; d < n_draws; ++d) {
      const ChannelSet cs = generate_channels(drop, sp, 1000 + d);
      acc += cs.of(0, 0, 0).squaredNorm() / (drop.epsilon(0, 0) * sp.tx_antennas);
    }
    // per-draw variance of the normalized norm is 1/N_t
    const double stderr_mean = 1.0 / std::sqrt(double(sp.tx_antennas) * n_draws);
    CHECK(std::abs(acc / n_draws - 1.0) <= 3.0 * stderr_mean);
  }

  SECTION("correlated entries reproduce the covariance") {
    SystemParams sp = th::small_params(1, 1, 4, 1.0, 0.5);
    const UserDrop drop = generate_user_drop(CellGeometry{}, 1, 1, 22);
    const Eigen::MatrixXd R = correlation_matrix(0.5, 4);
    const int n_draws = 10000;
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(4, 4);
    for (int d = 0; d < n_draws; ++d) {
      const ChannelSet cs = generate_channels(drop, sp, 5000 + d);
      const Eigen::VectorXcd z = cs.of(0, 0, 0) / std::sqrt(drop.epsilon(0, 0));
      cov += z * z.adjoint();
    }
    cov /= n_draws;
    // each entry's complex variance is exactly 1, so 3 sigma = 3/sqrt(n)
    const double tol = 3.0 / std::sqrt(double(n_draws));
    CHECK((cov - R.cast<Cplx>()).cwiseAbs().maxCoeff() <= tol);
  }

  SECTION("zero pathloss yields a zero vector") {
    SystemParams sp = th::small_params(1, 2, 4, 1.0);
    UserDrop drop = generate_user_drop(CellGeometry{}, 1, 2, 23);
    drop.epsilon(0, 0) = 0.0;
    const ChannelSet cs = generate_channels(drop, sp, 9);
    CHECK(cs.of(0, 0, 0).norm() == 0.0);
    CHECK(cs.of(0, 0, 1).norm() > 0.0);
  }

  SECTION("same seed reproduces the fading bitwise") {
    SystemParams sp = th::small_params(2, 2, 4, 1.0, 0.3);
    const UserDrop drop = generate_user_drop(CellGeometry{}, 2, 2, 24);
    const ChannelSet a = generate_channels(drop, sp, 77);
    const ChannelSet b = generate_channels(drop, sp, 77);
    const ChannelSet c = generate_channels(drop, sp, 78);
    double same = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.h.size(); ++i) {
      same = std::max(same, (a.h[i] - b.h[i]).cwiseAbs().maxCoeff());
      diff = std::max(diff, (a.h[i] - c.h[i]).cwiseAbs().maxCoeff());
    }
    CHECK(same == 0.0);
    CHECK(diff > 0.0);
  }
}

TEST_CASE("finite-dimension metrics match scalar re-computations", "[core]") {
  SystemParams sp = th::small_params(2, 2, 3, 2.5);
  sp.weights << 1.0, 2.0, 0.5, 3.0;
  const ChannelSet cs = th::random_channels(sp, 31);

  // arbitrary fixed beams within budget
  BeamformerSet b = BeamformerSet::zeros(2, 2, 3);
  Rng rng(99);
  for (auto& v : b.v) v = 0.5 * rng.cgaussian_vector(3);

  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      const double got = sinr(cs, b, j, k, sp.noise_power_w);
      const double want = th::sinr_reference(cs, b, j, k, sp.noise_power_w);
      CHECK(got == Approx(want).epsilon(1e-10));
    }
  CHECK(weighted_sum_rate(cs, b, sp.weights, sp.noise_power_w) ==
        Approx(th::wsr_reference(cs, b, sp.weights, sp.noise_power_w)).epsilon(1e-10));
  CHECK(total_power(b, sp) == Approx(th::total_power_reference(b, sp)).epsilon(1e-10));
  CHECK(energy_efficiency(cs, b, sp.weights, sp) ==
        Approx(sp.bandwidth_hz * th::wsr_reference(cs, b, sp.weights, sp.noise_power_w) /
               th::total_power_reference(b, sp))
            .epsilon(1e-10));
}

TEST_CASE("power model constants", "[core]") {
  // zero beams: only the beam-independent term M (N_t P_c + P_0) remains
  SystemParams sp = th::small_params(3, 3, 4, dbm_to_watt(46.0));
  const BeamformerSet zero = BeamformerSet::zeros(3, 3, 4);
  CHECK(total_power(zero, sp) == Approx(42.0).epsilon(1e-12));
  CHECK(sp.fixed_power_w() == Approx(42.0).epsilon(1e-12));
}

TEST_CASE("SINR is invariant to per-beam phase rotations", "[core]") {
  SystemParams sp = th::small_params(2, 2, 4, 1.0);
  const ChannelSet cs = th::random_channels(sp, 41);
  BeamformerSet b = mrt(cs, sp);
  const Eigen::MatrixXd before = all_sinrs(cs, b, sp.noise_power_w);
  Rng rng(5);
  for (auto& v : b.v) v *= std::polar(1.0, 2.0 * M_PI * rng.uniform());
  const Eigen::MatrixXd after = all_sinrs(cs, b, sp.noise_power_w);
  CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-12 * before.maxCoeff());
}

TEST_CASE("parameter validation rejects bad scenarios", "[core]") {
  SystemParams sp = th::small_params(2, 2, 4, 1.0);
  SECTION("rho out of range") {
    sp.corr_rho = 1.0;
    CHECK_THROWS_AS(sp.validate(), std::invalid_argument);
  }
  SECTION("nonpositive budget") {
    sp.power_budget_w(0) = 0.0;
    CHECK_THROWS_AS(sp.validate(), std::invalid_argument);
  }
  SECTION("weights shape mismatch") {
    sp.weights = Eigen::MatrixXd::Ones(2, 3);
    CHECK_THROWS_AS(sp.validate(), std::invalid_argument);
  }
  SECTION("amplifier inefficiency below one") {
    sp.amp_inefficiency = 0.5;
    CHECK_THROWS_AS(sp.validate(), std::invalid_argument);
  }
}
