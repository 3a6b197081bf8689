// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mimogan/metrics.hpp"

using namespace mimogan;

TEST_CASE("pdp statistics on a single bin") {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(64);
  p[10] = 2.0;
  const double fs = 30.72e6;
  const PdpStats s = pdp_stats(p, fs);
  CHECK(s.average_delay_us == doctest::Approx(10.0 / fs * 1e6).epsilon(1e-12));
  CHECK(s.rms_delay_spread_us == doctest::Approx(0.0));
  CHECK(s.total_power_db == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("pdp statistics on two equal bins") {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(64);
  p[4] = 1.0;
  p[8] = 1.0;
  const double fs = 1e6;  // 1 us per bin
  const PdpStats s = pdp_stats(p, fs);
  CHECK(s.average_delay_us == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(s.rms_delay_spread_us == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("delay statistics are scale invariant, power shifts in dB") {
  Eigen::VectorXd p(8);
  p << 0.5, 1.0, 0.3, 0.1, 0.05, 0.0, 0.0, 0.0;
  const PdpStats a = pdp_stats(p, 1e6);
  const PdpStats b = pdp_stats(100.0 * p, 1e6);
  CHECK(a.average_delay_us == doctest::Approx(b.average_delay_us).epsilon(1e-12));
  CHECK(a.rms_delay_spread_us == doctest::Approx(b.rms_delay_spread_us).epsilon(1e-12));
  CHECK(b.total_power_db - a.total_power_db == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("the cutoff excludes weak bins") {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(32);
  p[0] = 1.0;
  const PdpStats base = pdp_stats(p, 1e6);
  p[20] = 0.005;  // 23 dB below the peak, outside the 20 dB window
  const PdpStats with_weak = pdp_stats(p, 1e6);
  CHECK(with_weak.average_delay_us == doctest::Approx(base.average_delay_us));
  p[20] = 0.02;  // 17 dB below the peak, inside
  CHECK(pdp_stats(p, 1e6).average_delay_us > base.average_delay_us);
  CHECK(pdp_stats(p, 1e6, 10.0).average_delay_us ==
        doctest::Approx(base.average_delay_us));
}

TEST_CASE("degenerate profiles are rejected") {
  CHECK_THROWS_AS(pdp_stats(Eigen::VectorXd::Zero(8), 1e6), numeric_error);
  Eigen::VectorXd neg(3);
  neg << 1.0, -0.1, 0.0;
  CHECK_THROWS_AS(pdp_stats(neg, 1e6), config_error);
  CHECK_THROWS_AS(pdp_stats(Eigen::VectorXd(), 1e6), config_error);
}

TEST_CASE("power error convention reproduces the reference reconciliation") {
  // Two totals of 4.648 and 4.628 dB differ by -18.73 dB of linear error.
  PdpStats a, b;
  a.total_power_db = 4.648;
  b.total_power_db = 4.628;
  const PdpMae m = pdp_mae(a, b);
  CHECK(m.power_mae_db == doctest::Approx(-18.73).epsilon(0.01));

  const PdpMae zero = pdp_mae(a, a);
  CHECK(zero.power_mae_db == kPowerMaeFloorDb);
  CHECK(zero.avg_delay_mae_us == 0.0);
}

TEST_CASE("mean pdp averages realizations and links") {
  ChannelTensor h1(1, 2, 4), h2(1, 2, 4);
  h1.at(0, 0, 0) = cd{2.0, 0.0};
  h1.at(0, 1, 1) = cd{0.0, 2.0};
  h2.at(0, 0, 0) = cd{0.0, 0.0};
  const Eigen::VectorXd p = mean_pdp({h1, h2});
  CHECK(p[0] == doctest::Approx(4.0 / 4.0));
  CHECK(p[1] == doctest::Approx(4.0 / 4.0));
  CHECK(p[2] == 0.0);
}

TEST_CASE("spatial correlation of synthetic kronecker channels") {
  CorrelationConfig ref;
  ref.r_tx = CorrelationConfig::exponential(2, 0.64);
  ref.r_rx = CorrelationConfig::exponential(2, 0.36);
  const Eigen::MatrixXcd s_tx = correlation_sqrt(ref.r_tx);
  const Eigen::MatrixXcd s_rx = correlation_sqrt(ref.r_rx);

  CounterRng rng(21);
  std::vector<ChannelTensor> hs;
  for (int r = 0; r < 4000; ++r) {
    Eigen::MatrixXcd w(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) w(i, j) = rng.cnormal();
    const Eigen::MatrixXcd g = s_rx * w * s_tx.adjoint();
    ChannelTensor h(2, 2, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) h.at(i, j, 0) = g(i, j);
    hs.push_back(h);
  }
  const SpatialCorrReport rep = spatial_correlations(hs, ref);
  CHECK(rep.mae_tx < 0.03);
  CHECK(rep.mae_rx < 0.03);
  CHECK(rep.r_tx_hat(0, 0) == cd{1.0, 0.0});
}

TEST_CASE("uncorrelated channels report near-identity correlation") {
  CounterRng rng(22);
  std::vector<ChannelTensor> hs;
  for (int r = 0; r < 4000; ++r) {
    ChannelTensor h(2, 2, 2);
    for (cd& v : h.data) v = rng.cnormal();
    hs.push_back(h);
  }
  const SpatialCorrReport rep =
      spatial_correlations(hs, CorrelationConfig::identity(2, 2));
  CHECK(rep.mae_tx < 0.03);
  CHECK(rep.mae_rx < 0.03);
}

TEST_CASE("top-tap selection takes the strongest bins, ties to smaller delay") {
  ChannelTensor h(1, 1, 8);
  h.at(0, 0, 1) = cd{3.0, 0.0};
  h.at(0, 0, 4) = cd{2.0, 0.0};
  h.at(0, 0, 6) = cd{2.0, 0.0};
  const SpatialCorrReport rep =
      spatial_correlations({h}, CorrelationConfig::identity(1, 1), 2);
  REQUIRE(rep.top_taps.size() == 2);
  CHECK(rep.top_taps[0] == 1);
  CHECK(rep.top_taps[1] == 4);
}
