// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mimogan/common.hpp"

namespace mimogan {

using cd = std::complex<double>;
using ComplexVec = Eigen::VectorXcd;

/// A complex time series per antenna (rows = antennas, cols = samples).
struct Waveform {
  Eigen::MatrixXcd data;
  double sample_rate_hz = 30.72e6;

  Waveform() = default;
  Waveform(int antennas, int samples, double fs = 30.72e6)
      : data(Eigen::MatrixXcd::Zero(antennas, samples)), sample_rate_hz(fs) {}

  int antennas() const { return static_cast<int>(data.rows()); }
  int samples() const { return static_cast<int>(data.cols()); }
};

/// Sampled MIMO impulse response H(tau), n_rx x n_tx x n_taps.
struct ChannelTensor {
  int n_rx = 0, n_tx = 0, n_taps = 0;
  double sample_rate_hz = 30.72e6;
  std::vector<cd> data;  // [rx][tx][tap], tap fastest

  ChannelTensor() = default;
  ChannelTensor(int nrx, int ntx, int ntaps, double fs = 30.72e6)
      : n_rx(nrx), n_tx(ntx), n_taps(ntaps), sample_rate_hz(fs),
        data(static_cast<std::size_t>(nrx) * ntx * ntaps, cd{0.0, 0.0}) {}

  cd& at(int i, int j, int t) {
    return data[(static_cast<std::size_t>(i) * n_tx + j) * n_taps + t];
  }
  cd at(int i, int j, int t) const {
    return data[(static_cast<std::size_t>(i) * n_tx + j) * n_taps + t];
  }

  /// Impulse response of link (i, j) as a length-L vector.
  ComplexVec link(int i, int j) const {
    ComplexVec h(n_taps);
    for (int t = 0; t < n_taps; ++t) h[t] = at(i, j, t);
    return h;
  }
};

void check_finite(const Waveform& w, const char* what);
void check_finite(const ChannelTensor& h, const char* what);

/// y_i[n] = sum_j sum_tau h_ij[tau] x_j[n-tau], truncated to the first
/// x.samples() output samples (x is zero for negative indices).
Waveform convolve(const ChannelTensor& h, const Waveform& x);

/// Batched convolution of many realizations with one shared input.  Internally
/// restructured as matrix products over the realization dimension; per-output
/// values may differ from convolve() by floating-point association only.
std::vector<Waveform> convolve_batch(const std::vector<ChannelTensor>& hs,
                                     const Waveform& x);

/// N_R x N_R matrix of inter-antenna inner products:
/// G[a,b] = sum_n y_a[n] conj(y_b[n]).  Exactly Hermitian by construction.
Eigen::MatrixXcd rx_gram(const Waveform& y);

}  // namespace mimogan
