// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "mimogan/channel.hpp"
#include "mimogan/dataset.hpp"

namespace mimogan {

/// ITU-R P.1407-style delay statistics with a relative power cutoff.
struct PdpStats {
  double total_power_db = 0.0;
  double average_delay_us = 0.0;
  double rms_delay_spread_us = 0.0;
  double cutoff_db = 20.0;
};

/// Antenna- and realization-averaged power per delay bin: p[tau] = E |h[tau]|^2.
Eigen::VectorXd mean_pdp(const std::vector<ChannelTensor>& channels);

/// Statistics over bins with p >= max(p) * 10^(-cutoff/10).
/// Throws numeric_error for an all-zero profile.
PdpStats pdp_stats(const Eigen::VectorXd& pdp, double sample_rate_hz,
                   double cutoff_db = 20.0);

struct PdpMae {
  double power_mae_db = 0.0;    // 10*log10 |P_a,lin - P_b,lin|, floored at -100
  double avg_delay_mae_us = 0.0;
  double rms_mae_us = 0.0;
};

/// Power error floor (identical powers report "< -100 dB").
constexpr double kPowerMaeFloorDb = -100.0;

PdpMae pdp_mae(const PdpStats& a, const PdpStats& b);

struct SpatialCorrReport {
  Eigen::MatrixXcd r_tx_hat;  // unit-diagonal normalized E[H^H H] over top taps
  Eigen::MatrixXcd r_rx_hat;  // unit-diagonal normalized E[H H^H] over top taps
  double mae_tx = 0.0;
  double mae_rx = 0.0;
  std::vector<int> top_taps;
};

/// Accumulates per-tap correlation over the strongest `top_taps` delay bins
/// (by mean power, ties to the smaller delay) and compares against the
/// configured Kronecker factors.  MAE is the mean elementwise absolute error
/// over real and imaginary parts.
SpatialCorrReport spatial_correlations(const std::vector<ChannelTensor>& channels,
                                       const CorrelationConfig& ref, int top_taps = 10);

/// CIR estimates recovered from sequential impulse probing: output waveform k
/// of a measurement is column k of that realization's channel (truncated to T).
std::vector<ChannelTensor> channels_from_measurements(
    const Dataset& ds, const std::vector<std::int64_t>& ids);

}  // namespace mimogan
