// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>

#include "mimogan/channel.hpp"
#include "mimogan/metrics.hpp"

using namespace mimogan;

namespace {

std::string data_path(const std::string& name) {
  if (const char* env = std::getenv("MIMOGAN_DATA_DIR"))
    return std::string(env) + "/" + name;
  return std::string(MIMOGAN_DATA_DIR) + "/" + name;
}

ChannelRealizationConfig base_config(int n_tx, int n_rx, const std::string& profile) {
  ChannelRealizationConfig c;
  c.profile = TdlProfile::load_csv(data_path(profile), profile);
  c.correlation = CorrelationConfig::identity(n_tx, n_rx);
  c.n_tx = n_tx;
  c.n_rx = n_rx;
  c.rng_seed = 77;
  return c;
}

}  // namespace

TEST_CASE("bundled TDL tables load and validate") {
  const TdlProfile a = TdlProfile::load_csv(data_path("tdl_a.csv"), "tdl-a");
  CHECK(a.n_paths() == 23);
  CHECK(a.delays_norm.front() == 0.0);
  CHECK(a.delays_norm.back() == doctest::Approx(9.6586));
  const TdlProfile b = TdlProfile::load_csv(data_path("tdl_b.csv"), "tdl-b");
  CHECK(b.n_paths() == 23);
  CHECK(b.delays_norm.back() == doctest::Approx(4.7834));

  double sum = 0.0;
  for (double p : a.powers_linear()) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("profile validation rejects malformed tables") {
  TdlProfile p = TdlProfile::single_tap();
  CHECK_NOTHROW(p.validate());

  TdlProfile bad = p;
  bad.delays_norm = {0.1};
  CHECK_THROWS_AS(bad.validate(), config_error);

  bad = p;
  bad.delays_norm = {0.0, 2.0, 1.0};
  bad.powers_db = {0.0, -1.0, -2.0};
  CHECK_THROWS_AS(bad.validate(), config_error);

  bad = p;
  bad.powers_db = {0.0, -1.0};
  CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("correlation square root reconstructs the matrix") {
  const Eigen::MatrixXcd r = CorrelationConfig::exponential(4, 0.3);
  const Eigen::MatrixXcd s = correlation_sqrt(r);
  CHECK((s * s.adjoint() - r).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXcd not_psd = Eigen::MatrixXcd::Identity(2, 2);
  not_psd(0, 1) = not_psd(1, 0) = cd{2.0, 0.0};
  CHECK_THROWS_AS(correlation_sqrt(not_psd), config_error);
}

TEST_CASE("exponential correlation parameterization") {
  const Eigen::MatrixXcd r = CorrelationConfig::exponential(4, 0.3);
  CHECK(r(0, 0).real() == doctest::Approx(1.0));
  CHECK(r(0, 3).real() == doctest::Approx(0.3));
  CHECK(r(0, 1).real() == doctest::Approx(std::pow(0.3, 1.0 / 9.0)));
  CHECK(r(0, 2).real() == doctest::Approx(std::pow(0.3, 4.0 / 9.0)));

  CorrelationConfig cc;
  cc.r_tx = r;
  cc.r_rx = CorrelationConfig::exponential(4, 0.3874);
  CHECK_NOTHROW(cc.validate());
  cc.r_tx(0, 1) = cd{0.9, 0.0};  // breaks hermitian symmetry
  CHECK_THROWS_AS(cc.validate(), config_error);
}

TEST_CASE("bundled medium correlation files match the parameterization") {
  const Eigen::MatrixXcd tx = CorrelationConfig::load_csv(data_path("medium_a_tx4.csv"));
  const Eigen::MatrixXcd rx = CorrelationConfig::load_csv(data_path("medium_a_rx4.csv"));
  CHECK((tx - CorrelationConfig::exponential(4, 0.3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((rx - CorrelationConfig::exponential(4, 0.3874)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("interpolation kernel basics") {
  CHECK(interp_kernel(0.0) == doctest::Approx(1.0));
  for (int k = 1; k <= 16; ++k) CHECK(std::abs(interp_kernel(double(k))) < 1e-12);
  CHECK(interp_kernel(0.37) == doctest::Approx(interp_kernel(-0.37)));
  CHECK(interp_kernel(17.0) == 0.0);
}

TEST_CASE("fixed-gain channel is a deterministic single tap") {
  ChannelRealizationConfig c = base_config(2, 2, "tdl_a.csv");
  c.fixed_gain = cd{0.5, -0.25};
  const ChannelTensor h = sample_channel(c, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(h.at(i, j, 0) == cd{0.5, -0.25});
      for (int t = 1; t < c.n_taps; ++t) CHECK(h.at(i, j, t) == cd{0.0, 0.0});
    }
}

TEST_CASE("sampling is deterministic in (config, realization)") {
  const ChannelRealizationConfig c = base_config(2, 2, "tdl_a.csv");
  const ChannelTensor h1 = sample_channel(c, 5);
  const ChannelTensor h2 = sample_channel(c, 5);
  const ChannelTensor h3 = sample_channel(c, 6);
  CHECK(h1.data == h2.data);
  CHECK(h1.data != h3.data);
}

TEST_CASE("per-link energy is normalized on average") {
  const ChannelRealizationConfig c = base_config(1, 1, "tdl_a.csv");
  double e = 0.0;
  const int n = 3000;
  for (int r = 0; r < n; ++r) {
    const ChannelTensor h = sample_channel(c, r);
    for (int t = 0; t < c.n_taps; ++t) e += std::norm(h.at(0, 0, t));
  }
  // Band-limited placement loses a little energy outside the kept window.
  CHECK(e / n == doctest::Approx(0.9638).epsilon(0.05));
}

TEST_CASE("monte-carlo delay statistics match the projected-profile oracle") {
  const ChannelRealizationConfig c = base_config(1, 1, "tdl_a.csv");
  std::vector<ChannelTensor> hs;
  for (int r = 0; r < 4000; ++r) hs.push_back(sample_channel(c, r));
  const PdpStats s = pdp_stats(mean_pdp(hs), c.sample_rate_hz);
  CHECK(s.average_delay_us == doctest::Approx(0.254766).epsilon(0.02));
  CHECK(s.rms_delay_spread_us == doctest::Approx(0.283182).epsilon(0.02));
  CHECK(s.total_power_db == doctest::Approx(-0.270447).epsilon(0.25));
}

TEST_CASE("configured spatial correlation is recovered") {
  ChannelRealizationConfig c = base_config(2, 2, "tdl_a.csv");
  c.correlation.r_tx = CorrelationConfig::exponential(2, 0.81);  // rho = 0.9
  c.correlation.r_rx = CorrelationConfig::exponential(2, 0.25);
  std::vector<ChannelTensor> hs;
  for (int r = 0; r < 3000; ++r) hs.push_back(sample_channel(c, r));
  const SpatialCorrReport rep = spatial_correlations(hs, c.correlation);
  CHECK(rep.mae_tx < 0.05);
  CHECK(rep.mae_rx < 0.05);
}

TEST_CASE("config validation catches impossible layouts") {
  ChannelRealizationConfig c = base_config(2, 2, "tdl_a.csv");
  CHECK_NOTHROW(c.validate());
  c.n_taps = 8;  // far too short for the 2.9 us of delay spread
  CHECK_THROWS_AS(c.validate(), config_error);
  c = base_config(2, 2, "tdl_a.csv");
  c.correlation = CorrelationConfig::identity(3, 2);
  CHECK_THROWS_AS(c.validate(), config_error);
}
