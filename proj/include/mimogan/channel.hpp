// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mimogan/rng.hpp"
#include "mimogan/tensor.hpp"

namespace mimogan {

/// Tapped-delay-line profile: normalized delays (scaled by the desired delay
/// spread) and relative powers in dB.  Linear powers are normalized to unit
/// total before use.
struct TdlProfile {
  std::string name;
  std::vector<double> delays_norm;  // ascending, delays_norm[0] == 0
  std::vector<double> powers_db;
  double delay_spread_ns = 300.0;

  int n_paths() const { return static_cast<int>(delays_norm.size()); }
  /// Linear powers, normalized so they sum to 1.
  std::vector<double> powers_linear() const;
  /// Path delays in seconds.
  std::vector<double> delays_s() const;

  void validate() const;

  /// CSV with header `delay_normalized,power_db`, one row per path.
  static TdlProfile load_csv(const std::string& path, const std::string& name,
                             double delay_spread_ns = 300.0);
  /// Single path at delay 0, power 0 dB.
  static TdlProfile single_tap();
};

/// Kronecker spatial correlation: unit-diagonal Hermitian PSD factors.
struct CorrelationConfig {
  Eigen::MatrixXcd r_tx;
  Eigen::MatrixXcd r_rx;

  void validate() const;

  static CorrelationConfig identity(int n_tx, int n_rx);
  /// ULA exponential parameterization: R_ij = a^((|i-j|/(N-1))^2), N > 1.
  static Eigen::MatrixXcd exponential(int n, double a);
  /// Square complex matrix as CSV of re,im pairs, row-major.
  static Eigen::MatrixXcd load_csv(const std::string& path);
  static void save_csv(const Eigen::MatrixXcd& m, const std::string& path);
};

struct ChannelRealizationConfig {
  TdlProfile profile;
  CorrelationConfig correlation;
  int n_tx = 1, n_rx = 1;
  int n_taps = 128;
  double sample_rate_hz = 30.72e6;
  std::uint64_t rng_seed = 0;
  /// When set, the channel is the deterministic single tap h[0] = fixed_gain
  /// on every link (degenerate test channel; profile/correlation are unused).
  std::optional<cd> fixed_gain;

  void validate() const;
};

/// S with S S^H = R (Hermitian PSD square root via eigendecomposition).
/// Throws config_error if an eigenvalue is below -1e-8.
Eigen::MatrixXcd correlation_sqrt(const Eigen::MatrixXcd& r);

/// Hann-windowed sinc interpolation kernel (33 taps, half-width 16 samples).
double interp_kernel(double t);

/// Draws one channel realization.  Deterministic in (cfg, realization_index):
/// path p of realization r uses the RNG stream (seed, r, p).
ChannelTensor sample_channel(const ChannelRealizationConfig& cfg,
                             std::uint64_t realization_index);

/// Public simulator entry point; delegates to convolve.
Waveform apply_channel(const ChannelTensor& h, const Waveform& x);

}  // namespace mimogan
