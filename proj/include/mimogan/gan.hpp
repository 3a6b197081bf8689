// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mimogan/dataset.hpp"
#include "mimogan/nn.hpp"
#include "mimogan/tensor.hpp"

namespace mimogan {

struct GeneratorConfig {
  int z_dim = 32;
  int embed_dim = 4;
  std::vector<int> hidden{100, 100};
  int n_tx = 1, n_rx = 1, n_taps = 128;
  double sample_rate_hz = 30.72e6;
  /// Conditioned: one trunk shared across links, input z + embed(i,j),
  /// output one link (2L).  Unconditioned: trunk emits the full tensor.
  bool conditional = true;

  int n_links() const { return n_rx * n_tx; }
  MlpSpec trunk_spec() const;
};

struct CriticConfig {
  int embed_dim = 4;
  std::vector<int> hidden{100, 100};
  int n_rx = 1;
  int n_samples = 128;  // T
  /// Conditioned: per-rx-antenna scores (averaged); unconditioned: one score
  /// over the full multi-antenna output.
  bool conditional = true;
  /// Append the interleaved rx-side gram matrix to the critic input (GM).
  bool use_gram = true;

  MlpSpec trunk_spec() const;
};

json to_json(const GeneratorConfig&);
json to_json(const CriticConfig&);
GeneratorConfig generator_config_from_json(const json&);
CriticConfig critic_config_from_json(const json&);

struct GanModel {
  GeneratorConfig gcfg;
  CriticConfig dcfg;
  ParamStore gen_params;
  ParamStore critic_params;

  static GanModel init(const GeneratorConfig& g, const CriticConfig& d,
                       std::uint64_t seed);

  /// One channel realization from one latent vector; every link of the
  /// realization shares the same z.
  ChannelTensor generate_channel(const Eigen::VectorXd& z) const;
  ComplexVec generate_link(const Eigen::VectorXd& z, int i, int j) const;
  /// Batched sampling: z is (z_dim x B), one realization per column.
  std::vector<ChannelTensor> generate_batch(const ad::Mat& z) const;

  /// Batched sample + apply in one call: convolves every realization of
  /// generate_batch(z) with the shared input x, without materializing the
  /// intermediate tensors.  Matches generate_batch + apply_channel up to
  /// floating-point association.
  std::vector<Waveform> simulate_batch(const ad::Mat& z, const Waveform& x) const;

  /// Critic value (fast path).  Conditioned critics score antenna `rx_index`
  /// of y; unconditioned critics score the whole waveform.  The gram side
  /// input is computed internally when enabled.
  double critic_score(const Waveform& y, int rx_index = 0) const;

  std::size_t param_count() const { return gen_params.scalar_count() + critic_params.scalar_count(); }

  void save(const std::string& path, const json& extra_meta = json::object()) const;
  static GanModel load(const std::string& path);
};

struct TrainConfig {
  int epochs = 500;
  int critic_iters = 25;  // critic iterations per generator iteration
  double gp_lambda = 10.0;
  AdamConfig adam;        // lr 2e-4, betas (0.5, 0.9)
  int batch_size = 256;
  std::uint64_t seed = 0;
  int eval_every = 5;       // epochs between validation evaluations (0 = off)
  int n_val_samples = 256;  // generated realizations per validation eval
  int max_val_measurements = 2000;
  int checkpoint_every = 0;  // epochs between checkpoints (0 = final only)
  /// Restore the parameters with the best validation score (avg-delay MAE +
  /// rms MAE + scaled linear power error) at the end of training instead of
  /// keeping the last epoch.  Requires eval_every > 0.
  bool select_best = false;
  std::string out_dir;       // when set: metrics.jsonl and checkpoints/
};

json to_json(const TrainConfig&);
TrainConfig train_config_from_json(const json&);

struct EpochLog {
  int epoch = 0;
  double critic_loss = 0.0, gen_loss = 0.0, penalty = 0.0, wdist = 0.0;
  double mean_grad_norm = 0.0;  // mean ||grad_y D|| at the interpolates
  double val_avg_delay_mae_ns = std::numeric_limits<double>::quiet_NaN();
  double val_rms_mae_ns = std::numeric_limits<double>::quiet_NaN();
  double val_power_mae_db = std::numeric_limits<double>::quiet_NaN();
  json to_json() const;
};

struct TrainResult {
  std::vector<EpochLog> log;
  double final_mean_grad_norm = 0.0;
  double best_val_avg_delay_mae_ns = std::numeric_limits<double>::quiet_NaN();
  int selected_epoch = -1;  // epoch restored by select_best (-1: last epoch)
};

/// WGAN-GP training: `critic_iters` critic updates per generator update; one
/// epoch is one full pass of the training split through the critic.
/// Deterministic in (model init, dataset, config).  Throws numeric_error if
/// the critic loss exceeds 1e6 in magnitude.
TrainResult train(GanModel& model, const Dataset& ds, const TrainConfig& cfg);

struct BatchLoss {
  double critic_loss = 0.0;
  double gen_loss = 0.0;
  double penalty = 0.0;       // mean (||g||-1)^2 before the lambda weight
  double wdist = 0.0;         // E[D(real)] - E[D(fake)]
  double mean_grad_norm = 0.0;
};

/// Evaluates the WGAN-GP objective on one batch without updating anything.
/// Draw contract: latent vectors come from rng.derive(21) (column major, one
/// z per measurement), interpolation weights from rng.derive(22) (one uniform
/// per measurement, shared across its antennas and transmissions).
BatchLoss wgan_gp_batch_loss(const GanModel& model,
                             const std::vector<const Measurement*>& batch,
                             double gp_lambda, CounterRng rng);

}  // namespace mimogan
