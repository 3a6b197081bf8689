// SPDX-License-Identifier: Apache-2.0
#include "mimogan/tensor.hpp"

#include <string>

namespace mimogan {

void check_finite(const Waveform& w, const char* what) {
  if (!w.data.allFinite())
    throw numeric_error(std::string(what) + ": waveform contains NaN/Inf");
}

void check_finite(const ChannelTensor& h, const char* what) {
  for (const cd& v : h.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw numeric_error(std::string(what) + ": channel tensor contains NaN/Inf");
}

Waveform convolve(const ChannelTensor& h, const Waveform& x) {
  require(x.antennas() == h.n_tx, "convolve: x.antennas != H.n_tx");
  require(x.sample_rate_hz == h.sample_rate_hz, "convolve: sample rate mismatch");
  check_finite(h, "convolve");
  check_finite(x, "convolve");

  const int T = x.samples();
  Waveform y(h.n_rx, T, x.sample_rate_hz);
  for (int i = 0; i < h.n_rx; ++i) {
    for (int j = 0; j < h.n_tx; ++j) {
      for (int t = 0; t < h.n_taps; ++t) {
        if (t >= T) break;
        const cd g = h.at(i, j, t);
        if (g == cd{0.0, 0.0}) continue;
        y.data.row(i).segment(t, T - t) += g * x.data.row(j).head(T - t);
      }
    }
  }
  return y;
}

std::vector<Waveform> convolve_batch(const std::vector<ChannelTensor>& hs,
                                     const Waveform& x) {
  std::vector<Waveform> out;
  if (hs.empty()) return out;
  const ChannelTensor& h0 = hs.front();
  require(x.antennas() == h0.n_tx, "convolve_batch: x.antennas != H.n_tx");
  require(x.sample_rate_hz == h0.sample_rate_hz, "convolve_batch: sample rate mismatch");
  check_finite(x, "convolve_batch");
  const int B = static_cast<int>(hs.size());
  const int T = x.samples();
  const int L = std::min(h0.n_taps, T);

  // One Toeplitz operator per tx antenna: X_j(t, n) = x_j[n - t].
  std::vector<Eigen::MatrixXcd> toep(h0.n_tx, Eigen::MatrixXcd::Zero(L, T));
  for (int j = 0; j < h0.n_tx; ++j)
    for (int t = 0; t < L; ++t)
      toep[j].row(t).segment(t, T - t) = x.data.row(j).head(T - t);

  Eigen::MatrixXcd taps(B, L);
  std::vector<Eigen::MatrixXcd> y(h0.n_rx, Eigen::MatrixXcd::Zero(B, T));
  for (int i = 0; i < h0.n_rx; ++i) {
    y[i].setZero();
    for (int j = 0; j < h0.n_tx; ++j) {
      for (int b = 0; b < B; ++b) {
        const ChannelTensor& h = hs[b];
        require(h.n_rx == h0.n_rx && h.n_tx == h0.n_tx && h.n_taps == h0.n_taps &&
                    h.sample_rate_hz == h0.sample_rate_hz,
                "convolve_batch: realization shape mismatch");
        for (int t = 0; t < L; ++t) taps(b, t) = h.at(i, j, t);
      }
      y[i].noalias() += taps * toep[j];
    }
  }

  out.assign(B, Waveform(h0.n_rx, T, x.sample_rate_hz));
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < h0.n_rx; ++i) out[b].data.row(i) = y[i].row(b);
  for (const Waveform& w : out) check_finite(w, "convolve_batch");
  return out;
}

Eigen::MatrixXcd rx_gram(const Waveform& y) {
  check_finite(y, "rx_gram");
  const int n = y.antennas();
  Eigen::MatrixXcd g(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      cd s = y.data.row(a).dot(y.data.row(b));  // Eigen dot conjugates the first arg
      s = std::conj(s);                         // we want y_a . conj(y_b)
      if (a == b) s = cd{s.real(), 0.0};
      g(a, b) = s;
      g(b, a) = std::conj(s);
    }
  }
  return g;
}

}  // namespace mimogan
