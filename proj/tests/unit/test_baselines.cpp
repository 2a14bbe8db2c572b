#include "helpers.hpp"

using namespace eebf;
using Catch::Approx;

TEST_CASE("matched filtering aligns with the own channel", "[baselines]") {
  SystemParams sp = th::small_params(2, 2, 4, 3.0);
  const ChannelSet cs = th::random_channels(sp, 101);
  const BeamformerSet b = mrt(cs, sp);

  for (int j = 0; j < 2; ++j) {
    // equal split uses the budget exactly
    CHECK(b.bs_power(j) == Approx(sp.power_budget_w(j)).epsilon(1e-12));
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXcd& h = cs.of(j, j, k);
      const Eigen::VectorXcd& v = b.at(j, k);
      // Cauchy-Schwarz holds with equality iff collinear
      CHECK(std::abs(th::inner_product(h, v)) == Approx(h.norm() * v.norm()).epsilon(1e-12));
      CHECK(v.squaredNorm() == Approx(sp.power_budget_w(j) / 2).epsilon(1e-12));
    }
  }

  SECTION("no same-norm beam collects more desired power") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXcd u = rng.cgaussian_vector(4);
      u *= b.at(0, 0).norm() / u.norm();
      CHECK(th::gain(cs.of(0, 0, 0), u) <=
            th::gain(cs.of(0, 0, 0), b.at(0, 0)) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("zero forcing nulls every other served user", "[baselines]") {
  SystemParams sp = th::small_params(2, 2, 4, 3.0);
  const ChannelSet cs = th::random_channels(sp, 102);
  const ZfbfResult res = zfbf(cs, sp);
  CHECK_FALSE(res.dimension_deficient);  // 3 directions to null in C^4

  for (int j = 0; j < 2; ++j) {
    CHECK(res.beams.bs_power(j) == Approx(sp.power_budget_w(j)).epsilon(1e-12));
    for (int k = 0; k < 2; ++k) {
      const double desired = th::gain(cs.of(j, j, k), res.beams.at(j, k));
      CHECK(desired > 0.0);
      for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
          if (m == j && n == k) continue;
          // leakage from BS j's beam (j,k) onto any other user it can see
          const double leak = th::gain(cs.of(j, m, n), res.beams.at(j, k));
          CHECK(leak <= 1e-9 * desired);
        }
    }
  }
}

TEST_CASE("zero forcing degrades gracefully when antennas run out", "[baselines]") {
  // 3 users per cell, 2 antennas: exact nulling of 2 directions in C^2 is
  // impossible, so the least-squares fallback must engage and stay feasible
  SystemParams sp = th::small_params(1, 3, 2, 2.0);
  const ChannelSet cs = th::random_channels(sp, 103);
  const ZfbfResult res = zfbf(cs, sp);
  CHECK(res.dimension_deficient);
  CHECK(res.beams.bs_power(0) == Approx(sp.power_budget_w(0)).epsilon(1e-12));
  for (int k = 0; k < 3; ++k) CHECK(res.beams.at(0, k).allFinite());
}

TEST_CASE("virtual-SINR beams", "[baselines]") {
  SECTION("single user reduces to matched filtering") {
    SystemParams sp = th::small_params(1, 1, 4, 2.0);
    const ChannelSet cs = th::random_channels(sp, 104);
    const BeamformerSet v = vsinr(cs, sp);
    const BeamformerSet m = mrt(cs, sp);
    CHECK(th::collinearity(v.at(0, 0), m.at(0, 0)) == Approx(1.0).epsilon(1e-10));
    CHECK(v.at(0, 0).squaredNorm() == Approx(sp.power_budget_w(0)).epsilon(1e-12));
  }
  SECTION("budgets are used exactly") {
    SystemParams sp = th::small_params(3, 2, 4, 1.5);
    const ChannelSet cs = th::random_channels(sp, 105);
    const BeamformerSet v = vsinr(cs, sp);
    for (int j = 0; j < 3; ++j)
      CHECK(v.bs_power(j) == Approx(sp.power_budget_w(j)).epsilon(1e-12));
  }
}

TEST_CASE("parametrized direction family limits", "[baselines]") {
  SystemParams sp = th::small_params(2, 2, 4, 1.0);
  const ChannelSet cs = th::random_channels(sp, 106);

  SECTION("zero loading gives matched-filter directions exactly") {
    const auto dirs =
        parametrized_directions(cs, 0, Eigen::MatrixXd::Zero(2, 2), 1.0);
    for (int k = 0; k < 2; ++k) {
      CHECK(th::collinearity(dirs[k], cs.of(0, 0, k)) == Approx(1.0).epsilon(1e-12));
      CHECK(dirs[k].norm() == Approx(1.0).epsilon(1e-12));
    }
  }
  SECTION("overwhelming regularization approaches matched filtering") {
    const auto dirs =
        parametrized_directions(cs, 0, Eigen::MatrixXd::Ones(2, 2), 1e12);
    for (int k = 0; k < 2; ++k)
      CHECK(th::collinearity(dirs[k], cs.of(0, 0, k)) == Approx(1.0).epsilon(1e-6));
  }
  SECTION("negative loading or regularizer is rejected") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(2, 2);
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(parametrized_directions(cs, 0, bad, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(parametrized_directions(cs, 0, Eigen::MatrixXd::Ones(2, 2), -1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("sum-rate ascent improves on its starting point", "[baselines]") {
  SystemParams sp = th::small_params(2, 2, 4, 2.0);
  sp.weights << 1.0, 2.0, 1.5, 0.5;
  const ChannelSet cs = th::random_channels(sp, 107);

  const BeamformerSet start = vsinr(cs, sp);
  const InnerResult res = wmmse_sum_rate(cs, sp);

  const double wsr_start = weighted_sum_rate(cs, start, sp.weights, sp.noise_power_w);
  const double wsr_end = weighted_sum_rate(cs, res.v, sp.weights, sp.noise_power_w);
  CHECK(wsr_end >= wsr_start * (1.0 - 1e-12));
  CHECK(res.iterations >= 1);

  // monotone trace up to rounding
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i] >= res.trace[i - 1] - 1e-9 * std::max(1.0, std::abs(res.trace[i])));

  CHECK(th::max_bs_power_violation(res.v, sp) <= 1e-9);
}
