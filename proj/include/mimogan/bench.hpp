// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mimogan/channel.hpp"
#include "mimogan/gan.hpp"

namespace mimogan {

struct BenchConfig {
  int n_runs = 2048;
  int warmup_runs = 16;
  int batch_size = 256;  // batched mode chunk
  int n_samples = 128;   // T of the convolved input
  std::uint64_t seed = 0;
};

/// One simulation = one channel sample + one convolution with a T-sample input.
struct BenchRow {
  std::string system;  // "reference" | "gan-unbatched" | "gan-batched"
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double sample_ms = 0.0;  // mean per-simulation sub-timings
  double apply_ms = 0.0;
  double speedup_vs_reference = 1.0;
};

struct BenchReport {
  std::string note;
  int n_runs = 0, warmup_runs = 0, batch_size = 0;
  int n_tx = 0, n_rx = 0;
  std::vector<BenchRow> rows;
  double gan_batch_speedup = 0.0;  // unbatched mean / batched mean
  /// Timing must not change results: outputs of the timed passes compared
  /// bytewise against untimed reruns of the same code path.
  bool timed_matches_untimed = false;

  json to_json() const;
};

/// Times the reference simulator and GAN sampling + application, per-run and
/// batched.  The reference baseline is this library's own simulator, so only
/// relative (batching) effects are meaningful across reports.
BenchReport run_bench(const ChannelRealizationConfig& ref_cfg, const GanModel& model,
                      const BenchConfig& cfg);

}  // namespace mimogan
