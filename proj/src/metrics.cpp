// SPDX-License-Identifier: Apache-2.0
#include "mimogan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mimogan {

Eigen::VectorXd mean_pdp(const std::vector<ChannelTensor>& channels) {
  require(!channels.empty(), "mean_pdp: empty set");
  const ChannelTensor& h0 = channels.front();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(h0.n_taps);
  for (const ChannelTensor& h : channels) {
    require(h.n_rx == h0.n_rx && h.n_tx == h0.n_tx && h.n_taps == h0.n_taps,
            "mean_pdp: shape mismatch");
    for (int i = 0; i < h.n_rx; ++i)
      for (int j = 0; j < h.n_tx; ++j)
        for (int t = 0; t < h.n_taps; ++t) p[t] += std::norm(h.at(i, j, t));
  }
  p /= double(channels.size()) * h0.n_rx * h0.n_tx;
  return p;
}

PdpStats pdp_stats(const Eigen::VectorXd& pdp, double sample_rate_hz, double cutoff_db) {
  require(pdp.size() > 0, "pdp_stats: empty profile");
  require(pdp.minCoeff() >= 0.0, "pdp_stats: negative power");
  const double peak = pdp.maxCoeff();
  if (peak <= 0.0) throw numeric_error("pdp_stats: all-zero profile, statistics undefined");

  const double floor = peak * std::pow(10.0, -cutoff_db / 10.0);
  double total = 0.0, first = 0.0, second = 0.0;
  for (int t = 0; t < pdp.size(); ++t) {
    if (pdp[t] < floor) continue;
    const double tau_us = double(t) / sample_rate_hz * 1e6;
    total += pdp[t];
    first += pdp[t] * tau_us;
    second += pdp[t] * tau_us * tau_us;
  }
  PdpStats s;
  s.cutoff_db = cutoff_db;
  s.total_power_db = 10.0 * std::log10(total);
  s.average_delay_us = first / total;
  s.rms_delay_spread_us = std::sqrt(std::max(0.0, second / total - s.average_delay_us * s.average_delay_us));
  return s;
}

PdpMae pdp_mae(const PdpStats& a, const PdpStats& b) {
  PdpMae m;
  const double pa = std::pow(10.0, a.total_power_db / 10.0);
  const double pb = std::pow(10.0, b.total_power_db / 10.0);
  const double diff = std::abs(pa - pb);
  m.power_mae_db = diff > 0.0 ? std::max(10.0 * std::log10(diff), kPowerMaeFloorDb)
                              : kPowerMaeFloorDb;
  m.avg_delay_mae_us = std::abs(a.average_delay_us - b.average_delay_us);
  m.rms_mae_us = std::abs(a.rms_delay_spread_us - b.rms_delay_spread_us);
  return m;
}

SpatialCorrReport spatial_correlations(const std::vector<ChannelTensor>& channels,
                                       const CorrelationConfig& ref, int top_taps) {
  require(!channels.empty(), "spatial_correlations: empty set");
  const ChannelTensor& h0 = channels.front();
  const int L = h0.n_taps;

  const Eigen::VectorXd pdp = mean_pdp(channels);
  std::vector<int> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return pdp[a] > pdp[b]; });
  const int keep = std::min<int>(top_taps, L);

  SpatialCorrReport rep;
  rep.top_taps.assign(order.begin(), order.begin() + keep);
  std::sort(rep.top_taps.begin(), rep.top_taps.end());

  Eigen::MatrixXcd acc_tx = Eigen::MatrixXcd::Zero(h0.n_tx, h0.n_tx);
  Eigen::MatrixXcd acc_rx = Eigen::MatrixXcd::Zero(h0.n_rx, h0.n_rx);
  Eigen::MatrixXcd ht(h0.n_rx, h0.n_tx);
  for (const ChannelTensor& h : channels) {
    for (int t : rep.top_taps) {
      for (int i = 0; i < h.n_rx; ++i)
        for (int j = 0; j < h.n_tx; ++j) ht(i, j) = h.at(i, j, t);
      acc_tx += ht.adjoint() * ht;  // R_TX = E[H^H H]
      acc_rx += ht * ht.adjoint();  // R_RX = E[H H^H]
    }
  }

  auto normalize = [](Eigen::MatrixXcd m) {
    Eigen::VectorXd d(m.rows());
    for (int i = 0; i < m.rows(); ++i) d[i] = 1.0 / std::sqrt(std::abs(m(i, i).real()));
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) m(i, j) *= d[i] * d[j];
    for (int i = 0; i < m.rows(); ++i) m(i, i) = cd{1.0, 0.0};
    return m;
  };
  rep.r_tx_hat = normalize(acc_tx);
  rep.r_rx_hat = normalize(acc_rx);

  auto mae = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(),
            "spatial_correlations: reference size mismatch");
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j)
        s += std::abs(a(i, j).real() - b(i, j).real()) +
             std::abs(a(i, j).imag() - b(i, j).imag());
    return s / (2.0 * a.rows() * a.cols());
  };
  rep.mae_tx = mae(rep.r_tx_hat, ref.r_tx);
  rep.mae_rx = mae(rep.r_rx_hat, ref.r_rx);
  return rep;
}

std::vector<ChannelTensor> channels_from_measurements(
    const Dataset& ds, const std::vector<std::int64_t>& ids) {
  require(ds.config.mode == ProbingMode::Sequential,
          "channels_from_measurements: needs sequential probing");
  const int n_tx = ds.config.channel.n_tx;
  const int n_rx = ds.config.channel.n_rx;
  const int L = std::min(ds.config.channel.n_taps, ds.config.n_samples);
  std::vector<ChannelTensor> out;
  out.reserve(ids.size());
  for (std::int64_t id : ids) {
    const Measurement& m = ds.measurements.at(static_cast<std::size_t>(id));
    ChannelTensor h(n_rx, n_tx, L, ds.config.channel.sample_rate_hz);
    for (int k = 0; k < n_tx; ++k) {
      const Waveform& y = m.outputs.at(k);
      for (int i = 0; i < n_rx; ++i)
        for (int t = 0; t < L; ++t) h.at(i, k, t) = y.data(i, t);
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace mimogan
