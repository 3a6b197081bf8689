// SPDX-License-Identifier: Apache-2.0
#include "mimogan/gan.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mimogan/metrics.hpp"

namespace mimogan {

namespace {

// Named RNG streams hanging off the model / training seed.
constexpr std::uint64_t kStreamGenTrunkInit = 10;
constexpr std::uint64_t kStreamGenEmbedInit = 11;
constexpr std::uint64_t kStreamCriticTrunkInit = 12;
constexpr std::uint64_t kStreamCriticEmbedInit = 13;
constexpr std::uint64_t kStreamShuffle = 20;
constexpr std::uint64_t kStreamZ = 21;
constexpr std::uint64_t kStreamU = 22;
constexpr std::uint64_t kStreamEval = 23;

constexpr char kModelMagicTag[] = "mimogan-model";

Eigen::VectorXd interleave(const Eigen::VectorXcd& v) {
  Eigen::VectorXd r(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    r[2 * i] = v[i].real();
    r[2 * i + 1] = v[i].imag();
  }
  return r;
}

/// Interleaved link response padded/truncated to T samples.
Eigen::VectorXd link_series(const ChannelTensor& h, int rx, int tx, int T) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * T);
  const int n = std::min(T, h.n_taps);
  for (int t = 0; t < n; ++t) {
    const cd v = h.at(rx, tx, t);
    r[2 * t] = v.real();
    r[2 * t + 1] = v.imag();
  }
  return r;
}

void fill_embed_init(ad::Mat& e, CounterRng rng) {
  for (int i = 0; i < e.rows(); ++i)
    for (int j = 0; j < e.cols(); ++j) e(i, j) = rng.normal();
}

ad::Mat sample_z(int z_dim, int batch, CounterRng rng) {
  ad::Mat z(z_dim, batch);
  for (int b = 0; b < batch; ++b)
    for (int i = 0; i < z_dim; ++i) z(i, b) = rng.normal();
  return z;
}

/// Critic score heads for one output waveform (one node of shape 2T x B per
/// rx antenna).  Conditioned critics return one head per antenna.
std::vector<int> critic_heads(ad::Tape& t, const CriticConfig& cfg,
                              const TapeParams& tp, const std::vector<int>& y_nodes) {
  const int B = static_cast<int>(t.value(y_nodes[0]).cols());
  const int T = cfg.n_samples;
  const int n_rx = cfg.n_rx;
  require(static_cast<int>(y_nodes.size()) == n_rx, "critic_heads: antenna count mismatch");

  int gram = -1;
  if (cfg.use_gram) {
    std::vector<int> u(n_rx), v(n_rx);
    for (int a = 0; a < n_rx; ++a) {
      u[a] = t.row_select(y_nodes[a], 0, 2, T);
      v[a] = t.row_select(y_nodes[a], 1, 2, T);
    }
    // G[a,b] = sum_n y_a[n] conj(y_b[n]), interleaved row-major.
    std::vector<int> rows;
    rows.reserve(2 * n_rx * n_rx);
    for (int a = 0; a < n_rx; ++a)
      for (int b = 0; b < n_rx; ++b) {
        rows.push_back(t.add(t.sum_rows(t.cmul(u[a], u[b])),
                             t.sum_rows(t.cmul(v[a], v[b]))));
        rows.push_back(t.sub(t.sum_rows(t.cmul(v[a], u[b])),
                             t.sum_rows(t.cmul(u[a], v[b]))));
      }
    gram = t.vert_cat(rows);
  }

  std::vector<int> scores;
  if (cfg.conditional) {
    for (int i = 0; i < n_rx; ++i) {
      std::vector<int> parts{y_nodes[i]};
      if (gram >= 0) parts.push_back(gram);
      const int e =
          t.broadcast_cols(t.transpose(t.row_select(tp.at("critic.embed"), i, 1, 1)), B);
      parts.push_back(e);
      scores.push_back(
          mlp_forward(t, cfg.trunk_spec(), tp, "critic.trunk", t.vert_cat(parts)));
    }
  } else {
    std::vector<int> parts = y_nodes;
    if (gram >= 0) parts.push_back(gram);
    scores.push_back(
        mlp_forward(t, cfg.trunk_spec(), tp, "critic.trunk", t.vert_cat(parts)));
  }
  return scores;
}

/// Per-transmission stacks of (2T x B) matrices, one per rx antenna.
struct BatchTensors {
  std::vector<std::vector<ad::Mat>> real, fake, interp;
  int n_trans = 0, n_rx = 0, batch = 0;
};

struct CriticPassResult {
  double critic_loss = 0.0, penalty = 0.0, wdist = 0.0;
  double mean_real = 0.0, mean_fake = 0.0, mean_grad_norm = 0.0;
  std::vector<ad::Mat> grads;
};

CriticPassResult critic_pass(const GanModel& model, const BatchTensors& bt,
                             double gp_lambda, bool want_grads) {
  ad::Tape t;
  const TapeParams dtp = leaf_params(t, model.critic_params);
  const int B = bt.batch;

  auto acc = [&t](int sum, int term) { return sum < 0 ? term : t.add(sum, term); };

  int real_sum = -1, fake_sum = -1, pen_sum = -1;
  int head_count = 0;
  double norm_acc = 0.0;

  for (int k = 0; k < bt.n_trans; ++k) {
    std::vector<int> rn(bt.n_rx), fn(bt.n_rx);
    for (int a = 0; a < bt.n_rx; ++a) {
      rn[a] = t.constant(bt.real[k][a]);
      fn[a] = t.constant(bt.fake[k][a]);
    }
    for (int s : critic_heads(t, model.dcfg, dtp, rn)) real_sum = acc(real_sum, t.sum_all(s));
    for (int s : critic_heads(t, model.dcfg, dtp, fn)) {
      fake_sum = acc(fake_sum, t.sum_all(s));
      ++head_count;
    }
  }

  // Gradient penalty on the interpolates, per (sample, head); the gradient is
  // taken w.r.t. the full output waveform and chained through the gram input.
  for (int k = 0; k < bt.n_trans; ++k) {
    std::vector<int> leaves(bt.n_rx);
    for (int a = 0; a < bt.n_rx; ++a) leaves[a] = t.leaf(bt.interp[k][a]);
    for (int s : critic_heads(t, model.dcfg, dtp, leaves)) {
      const std::vector<int> g = t.grad_nodes(t.sum_all(s), leaves);
      int sumsq = -1;
      for (int gl : g) sumsq = acc(sumsq, t.sum_rows(t.cmul(gl, gl)));
      const int norm = t.pow_const(sumsq, 0.5);
      norm_acc += t.value(norm).sum();
      const int pen = t.pow_const(t.add_const(norm, -1.0), 2.0);
      pen_sum = acc(pen_sum, t.sum_all(pen));
    }
  }

  const double inv = 1.0 / (double(head_count) * B);
  const int mean_real = t.scale(real_sum, inv);
  const int mean_fake = t.scale(fake_sum, inv);
  const int mean_pen = t.scale(pen_sum, inv);
  const int loss =
      t.add(t.sub(mean_fake, mean_real), t.scale(mean_pen, gp_lambda));

  CriticPassResult res;
  res.mean_real = t.scalar(mean_real);
  res.mean_fake = t.scalar(mean_fake);
  res.penalty = t.scalar(mean_pen);
  res.wdist = res.mean_real - res.mean_fake;
  res.critic_loss = t.scalar(loss);
  res.mean_grad_norm = norm_acc * inv;
  if (!std::isfinite(res.critic_loss))
    throw numeric_error("critic loss is not finite");
  if (want_grads) res.grads = t.grad(loss, dtp.ordered);
  return res;
}

struct GenPassResult {
  double gen_loss = 0.0;
  std::vector<ad::Mat> grads;
};

GenPassResult gen_pass(const GanModel& model, const ad::Mat& z,
                       const std::vector<int>& active_tx, int T, bool want_grads) {
  ad::Tape t;
  const TapeParams gtp = leaf_params(t, model.gen_params);
  const TapeParams dtp = leaf_params(t, model.critic_params);
  const GeneratorConfig& g = model.gcfg;
  const int B = static_cast<int>(z.cols());
  const int L = g.n_taps;
  const int zc = t.constant(z);

  std::vector<int> link_out(g.n_links());
  if (g.conditional) {
    for (int l = 0; l < g.n_links(); ++l) {
      const int e =
          t.broadcast_cols(t.transpose(t.row_select(gtp.at("gen.embed"), l, 1, 1)), B);
      link_out[l] =
          mlp_forward(t, g.trunk_spec(), gtp, "gen.trunk", t.vert_cat({zc, e}));
    }
  } else {
    const int big = mlp_forward(t, g.trunk_spec(), gtp, "gen.trunk", zc);
    for (int l = 0; l < g.n_links(); ++l)
      link_out[l] = t.row_select(big, l * 2 * L, 1, 2 * L);
  }

  auto pad = [&](int y) {
    if (T == L) return y;
    if (T < L) return t.row_select(y, 0, 1, 2 * T);
    return t.vert_cat({y, t.constant(ad::Mat::Zero(2 * (T - L), B))});
  };

  auto acc = [&t](int sum, int term) { return sum < 0 ? term : t.add(sum, term); };
  int score_sum = -1;
  int head_count = 0;
  for (int tx : active_tx) {
    std::vector<int> ynodes(g.n_rx);
    for (int a = 0; a < g.n_rx; ++a) {
      int y;
      if (tx >= 0) {
        y = link_out[a * g.n_tx + tx];
      } else {  // simultaneous probing: superposition over transmit antennas
        y = link_out[a * g.n_tx];
        for (int j = 1; j < g.n_tx; ++j) y = t.add(y, link_out[a * g.n_tx + j]);
      }
      ynodes[a] = pad(y);
    }
    for (int s : critic_heads(t, model.dcfg, dtp, ynodes)) {
      score_sum = acc(score_sum, t.sum_all(s));
      ++head_count;
    }
  }

  const int loss = t.scale(score_sum, -1.0 / (double(head_count) * B));
  GenPassResult res;
  res.gen_loss = t.scalar(loss);
  if (!std::isfinite(res.gen_loss)) throw numeric_error("generator loss is not finite");
  if (want_grads) res.grads = t.grad(loss, gtp.ordered);
  return res;
}

std::vector<int> active_tx_list(ProbingMode mode, int n_tx) {
  if (mode == ProbingMode::Simultaneous) return {-1};
  std::vector<int> v(n_tx);
  for (int k = 0; k < n_tx; ++k) v[k] = k;
  return v;
}

void fill_real_columns(BatchTensors& bt, const Measurement& m, int col, int T) {
  for (std::size_t k = 0; k < m.outputs.size(); ++k) {
    const Waveform& y = m.outputs[k];
    require(y.samples() == T, "train: measurement length != critic T");
    for (int a = 0; a < y.antennas(); ++a)
      bt.real[k][a].col(col) = interleave(y.data.row(a).transpose());
  }
}

void fill_fake_columns(BatchTensors& bt, const ChannelTensor& h,
                       const std::vector<int>& active_tx, int col, int T) {
  for (std::size_t k = 0; k < active_tx.size(); ++k) {
    for (int a = 0; a < h.n_rx; ++a) {
      Eigen::VectorXd v;
      if (active_tx[k] >= 0) {
        v = link_series(h, a, active_tx[k], T);
      } else {
        v = Eigen::VectorXd::Zero(2 * T);
        for (int j = 0; j < h.n_tx; ++j) v += link_series(h, a, j, T);
      }
      bt.fake[k][a].col(col) = v;
    }
  }
}

void verify_impulse_inputs(const Measurement& m, int n_tx) {
  // The training path exploits x being a unit impulse at n = 0.
  for (std::size_t k = 0; k < m.inputs.size(); ++k) {
    const Waveform& x = m.inputs[k];
    for (int j = 0; j < x.antennas(); ++j)
      for (int n = 0; n < x.samples(); ++n) {
        const bool active = n == 0 && (m.mode == ProbingMode::Simultaneous ||
                                       j == static_cast<int>(k));
        const cd expect = active ? cd{1.0, 0.0} : cd{0.0, 0.0};
        if (x.data(j, n) != expect)
          throw config_error("train: dataset inputs are not unit impulse probes");
      }
  }
  (void)n_tx;
}

/// Mean |y[t]|^2 over measurements, transmissions and rx antennas (T bins).
Eigen::VectorXd observed_pdp_meas(const Dataset& ds,
                                  const std::vector<std::int64_t>& ids, int max_n) {
  const int T = ds.config.n_samples;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(T);
  const int n = std::min<int>(static_cast<int>(ids.size()), max_n);
  require(n > 0, "observed_pdp: no measurements");
  long count = 0;
  for (int i = 0; i < n; ++i) {
    const Measurement& m = ds.measurements.at(static_cast<std::size_t>(ids[i]));
    for (const Waveform& y : m.outputs) {
      for (int a = 0; a < y.antennas(); ++a)
        for (int t = 0; t < T; ++t) p[t] += std::norm(y.data(a, t));
      count += y.antennas();
    }
  }
  return p / double(count);
}

/// Same statistic for generated channels under the dataset's probing mode.
Eigen::VectorXd observed_pdp_gen(const std::vector<ChannelTensor>& hs,
                                 ProbingMode mode, int T) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(T);
  long count = 0;
  for (const ChannelTensor& h : hs) {
    const int n = std::min(T, h.n_taps);
    if (mode == ProbingMode::Sequential) {
      for (int i = 0; i < h.n_rx; ++i)
        for (int j = 0; j < h.n_tx; ++j)
          for (int t = 0; t < n; ++t) p[t] += std::norm(h.at(i, j, t));
      count += h.n_rx * h.n_tx;
    } else {
      for (int i = 0; i < h.n_rx; ++i) {
        for (int t = 0; t < n; ++t) {
          cd s{0.0, 0.0};
          for (int j = 0; j < h.n_tx; ++j) s += h.at(i, j, t);
          p[t] += std::norm(s);
        }
      }
      count += h.n_rx;
    }
  }
  return p / double(count);
}

}  // namespace

MlpSpec GeneratorConfig::trunk_spec() const {
  MlpSpec s;
  s.hidden = hidden;
  if (conditional) {
    s.input_dim = z_dim + embed_dim;
    s.output_dim = 2 * n_taps;
  } else {
    s.input_dim = z_dim;
    s.output_dim = 2 * n_links() * n_taps;
  }
  return s;
}

MlpSpec CriticConfig::trunk_spec() const {
  MlpSpec s;
  s.hidden = hidden;
  int in = conditional ? 2 * n_samples : 2 * n_rx * n_samples;
  if (use_gram) in += 2 * n_rx * n_rx;
  if (conditional) in += embed_dim;
  s.input_dim = in;
  s.output_dim = 1;
  return s;
}

json to_json(const GeneratorConfig& g) {
  return {{"z_dim", g.z_dim},       {"embed_dim", g.embed_dim},
          {"hidden", g.hidden},     {"n_tx", g.n_tx},
          {"n_rx", g.n_rx},         {"n_taps", g.n_taps},
          {"sample_rate_hz", g.sample_rate_hz},
          {"conditional", g.conditional}};
}

json to_json(const CriticConfig& d) {
  return {{"embed_dim", d.embed_dim}, {"hidden", d.hidden},
          {"n_rx", d.n_rx},           {"n_samples", d.n_samples},
          {"conditional", d.conditional}, {"use_gram", d.use_gram}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig g;
  g.z_dim = j["z_dim"].get<int>();
  g.embed_dim = j["embed_dim"].get<int>();
  g.hidden = j["hidden"].get<std::vector<int>>();
  g.n_tx = j["n_tx"].get<int>();
  g.n_rx = j["n_rx"].get<int>();
  g.n_taps = j["n_taps"].get<int>();
  g.sample_rate_hz = j["sample_rate_hz"].get<double>();
  g.conditional = j["conditional"].get<bool>();
  return g;
}

CriticConfig critic_config_from_json(const json& j) {
  CriticConfig d;
  d.embed_dim = j["embed_dim"].get<int>();
  d.hidden = j["hidden"].get<std::vector<int>>();
  d.n_rx = j["n_rx"].get<int>();
  d.n_samples = j["n_samples"].get<int>();
  d.conditional = j["conditional"].get<bool>();
  d.use_gram = j["use_gram"].get<bool>();
  return d;
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"critic_iters", c.critic_iters},
          {"gp_lambda", c.gp_lambda},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"adam_eps", c.adam.eps},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"eval_every", c.eval_every},
          {"n_val_samples", c.n_val_samples},
          {"max_val_measurements", c.max_val_measurements},
          {"checkpoint_every", c.checkpoint_every},
          {"select_best", c.select_best}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j["epochs"].get<int>();
  c.critic_iters = j["critic_iters"].get<int>();
  c.gp_lambda = j["gp_lambda"].get<double>();
  c.adam.lr = j["lr"].get<double>();
  c.adam.beta1 = j["beta1"].get<double>();
  c.adam.beta2 = j["beta2"].get<double>();
  c.adam.eps = j["adam_eps"].get<double>();
  c.batch_size = j["batch_size"].get<int>();
  c.seed = j["seed"].get<std::uint64_t>();
  c.eval_every = j["eval_every"].get<int>();
  c.n_val_samples = j["n_val_samples"].get<int>();
  c.max_val_measurements = j["max_val_measurements"].get<int>();
  c.checkpoint_every = j["checkpoint_every"].get<int>();
  c.select_best = j.value("select_best", false);
  return c;
}

json EpochLog::to_json() const {
  json j = {{"epoch", epoch},           {"critic_loss", critic_loss},
            {"gen_loss", gen_loss},     {"penalty", penalty},
            {"wdist", wdist},           {"mean_grad_norm", mean_grad_norm}};
  if (std::isfinite(val_avg_delay_mae_ns)) {
    j["val_avg_delay_mae_ns"] = val_avg_delay_mae_ns;
    j["val_rms_mae_ns"] = val_rms_mae_ns;
    j["val_power_mae_db"] = val_power_mae_db;
  }
  return j;
}

GanModel GanModel::init(const GeneratorConfig& g, const CriticConfig& d,
                        std::uint64_t seed) {
  require(g.n_rx == d.n_rx, "GanModel: generator/critic rx count mismatch");
  GanModel m;
  m.gcfg = g;
  m.dcfg = d;
  const CounterRng root(seed);
  if (g.conditional) {
    ad::Mat& e = m.gen_params.add("gen.embed", g.n_links(), g.embed_dim);
    fill_embed_init(e, root.derive(kStreamGenEmbedInit));
  }
  init_mlp(m.gen_params, "gen.trunk", g.trunk_spec(), root.derive(kStreamGenTrunkInit));
  if (d.conditional) {
    ad::Mat& e = m.critic_params.add("critic.embed", d.n_rx, d.embed_dim);
    fill_embed_init(e, root.derive(kStreamCriticEmbedInit));
  }
  init_mlp(m.critic_params, "critic.trunk", d.trunk_spec(),
           root.derive(kStreamCriticTrunkInit));
  return m;
}

namespace {

/// Trunk output for every (link, realization) pair.  Conditioned layout is
/// (2L x NL*B) with link l in columns [l*B, (l+1)*B); unconditioned layout is
/// (2*NL*L x B) with link l in rows [l*2L, (l+1)*2L).
ad::Mat trunk_links_output(const GanModel& m, const ad::Mat& z) {
  const GeneratorConfig& g = m.gcfg;
  require(z.rows() == g.z_dim, "generate: z dimension mismatch");
  require(z.allFinite(), "generate: z not finite");
  const int B = static_cast<int>(z.cols());
  if (!g.conditional)
    return mlp_forward_plain(g.trunk_spec(), m.gen_params, "gen.trunk", z);
  const ad::Mat& e = m.gen_params.at("gen.embed");
  ad::Mat in(g.z_dim + g.embed_dim, g.n_links() * B);
  for (int l = 0; l < g.n_links(); ++l) {
    in.block(0, l * B, g.z_dim, B) = z;
    in.block(g.z_dim, l * B, g.embed_dim, B) = e.row(l).transpose().replicate(1, B);
  }
  return mlp_forward_plain(g.trunk_spec(), m.gen_params, "gen.trunk", in);
}

/// Link l of the trunk output viewed as a complex (L x B) matrix (interleaved
/// rows reinterpreted in place).
Eigen::Map<const Eigen::MatrixXcd, 0, Eigen::OuterStride<>> link_view(
    const ad::Mat& out, const GeneratorConfig& g, int l, int B) {
  const cd* base = reinterpret_cast<const cd*>(out.data());
  if (g.conditional)
    return {base + static_cast<std::ptrdiff_t>(l) * B * g.n_taps, g.n_taps, B,
            Eigen::OuterStride<>(g.n_taps)};
  return {base + static_cast<std::ptrdiff_t>(l) * g.n_taps, g.n_taps, B,
          Eigen::OuterStride<>(static_cast<Eigen::Index>(g.n_links()) * g.n_taps)};
}

}  // namespace

std::vector<ChannelTensor> GanModel::generate_batch(const ad::Mat& z) const {
  const int B = static_cast<int>(z.cols());
  const int L = gcfg.n_taps;
  std::vector<ChannelTensor> hs(B, ChannelTensor(gcfg.n_rx, gcfg.n_tx, L,
                                                 gcfg.sample_rate_hz));
  if (B == 0) return hs;
  const ad::Mat out = trunk_links_output(*this, z);
  for (int l = 0; l < gcfg.n_links(); ++l) {
    const int i = l / gcfg.n_tx, j = l % gcfg.n_tx;
    const auto v = link_view(out, gcfg, l, B);
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < L; ++t) hs[b].at(i, j, t) = v(t, b);
  }
  return hs;
}

std::vector<Waveform> GanModel::simulate_batch(const ad::Mat& z, const Waveform& x) const {
  require(x.antennas() == gcfg.n_tx, "simulate_batch: x.antennas != n_tx");
  require(x.sample_rate_hz == gcfg.sample_rate_hz,
          "simulate_batch: sample rate mismatch");
  check_finite(x, "simulate_batch");
  const int B = static_cast<int>(z.cols());
  const int T = x.samples();
  const int L = std::min(gcfg.n_taps, T);
  std::vector<Waveform> ys(B, Waveform(gcfg.n_rx, T, x.sample_rate_hz));
  if (B == 0) return ys;

  const ad::Mat out = trunk_links_output(*this, z);

  // Upper-triangular Toeplitz operator per tx antenna: X_j(t, n) = x_j[n - t].
  std::vector<Eigen::MatrixXcd> toep(gcfg.n_tx, Eigen::MatrixXcd::Zero(L, T));
  for (int j = 0; j < gcfg.n_tx; ++j)
    for (int t = 0; t < L; ++t)
      toep[j].row(t).segment(t, T - t) = x.data.row(j).head(T - t);

  Eigen::MatrixXcd y(B, T);
  for (int i = 0; i < gcfg.n_rx; ++i) {
    y.setZero();
    for (int j = 0; j < gcfg.n_tx; ++j) {
      const auto taps = link_view(out, gcfg, i * gcfg.n_tx + j, B);
      if (L == T)
        y.noalias() +=
            taps.transpose() * toep[j].triangularView<Eigen::Upper>();
      else
        y.noalias() += taps.topRows(L).transpose() * toep[j];
    }
    for (int b = 0; b < B; ++b) ys[b].data.row(i) = y.row(b);
  }
  for (const Waveform& w : ys) check_finite(w, "simulate_batch");
  return ys;
}

ChannelTensor GanModel::generate_channel(const Eigen::VectorXd& z) const {
  return generate_batch(z)[0];
}

ComplexVec GanModel::generate_link(const Eigen::VectorXd& z, int i, int j) const {
  require(i >= 0 && i < gcfg.n_rx && j >= 0 && j < gcfg.n_tx,
          "generate_link: link index out of range");
  return generate_channel(z).link(i, j);
}

double GanModel::critic_score(const Waveform& y, int rx_index) const {
  require(y.antennas() == dcfg.n_rx, "critic_score: antenna count mismatch");
  require(y.samples() == dcfg.n_samples, "critic_score: sample count mismatch");
  check_finite(y, "critic_score");
  std::vector<double> feat;
  auto push_series = [&](int a) {
    for (int n = 0; n < y.samples(); ++n) {
      feat.push_back(y.data(a, n).real());
      feat.push_back(y.data(a, n).imag());
    }
  };
  if (dcfg.conditional) {
    require(rx_index >= 0 && rx_index < dcfg.n_rx, "critic_score: rx index out of range");
    push_series(rx_index);
  } else {
    for (int a = 0; a < dcfg.n_rx; ++a) push_series(a);
  }
  if (dcfg.use_gram) {
    const Eigen::MatrixXcd g = rx_gram(y);
    for (int a = 0; a < g.rows(); ++a)
      for (int b = 0; b < g.cols(); ++b) {
        feat.push_back(g(a, b).real());
        feat.push_back(g(a, b).imag());
      }
  }
  if (dcfg.conditional) {
    const ad::Mat& e = critic_params.at("critic.embed");
    for (int j = 0; j < dcfg.embed_dim; ++j) feat.push_back(e(rx_index, j));
  }
  ad::Mat x = Eigen::Map<Eigen::VectorXd>(feat.data(), feat.size());
  return mlp_forward_plain(dcfg.trunk_spec(), critic_params, "critic.trunk", x)(0, 0);
}

void GanModel::save(const std::string& path, const json& extra_meta) const {
  json meta = extra_meta;
  meta["format"] = kModelMagicTag;
  meta["generator"] = to_json(gcfg);
  meta["critic"] = to_json(dcfg);
  save_param_stores(path, meta, {&gen_params, &critic_params});
}

GanModel GanModel::load(const std::string& path) {
  GanModel m;
  const json meta = load_param_stores(path, {&m.gen_params, &m.critic_params});
  if (!meta.contains("format") || meta["format"] != kModelMagicTag)
    throw io_error(io_error::kind::other, "not a model checkpoint: " + path);
  m.gcfg = generator_config_from_json(meta["generator"]);
  m.dcfg = critic_config_from_json(meta["critic"]);
  return m;
}

BatchLoss wgan_gp_batch_loss(const GanModel& model,
                             const std::vector<const Measurement*>& batch,
                             double gp_lambda, CounterRng rng) {
  require(!batch.empty(), "wgan_gp_batch_loss: empty batch");
  const int B = static_cast<int>(batch.size());
  const int T = model.dcfg.n_samples;
  const std::vector<int> active =
      active_tx_list(batch[0]->mode, model.gcfg.n_tx);
  const int n_trans = static_cast<int>(active.size());

  BatchTensors bt;
  bt.n_trans = n_trans;
  bt.n_rx = model.gcfg.n_rx;
  bt.batch = B;
  bt.real.assign(n_trans, std::vector<ad::Mat>(bt.n_rx, ad::Mat(2 * T, B)));
  bt.fake = bt.real;
  bt.interp = bt.real;

  const ad::Mat z = sample_z(model.gcfg.z_dim, B, rng.derive(kStreamZ));
  const std::vector<ChannelTensor> fakes = model.generate_batch(z);
  CounterRng urng = rng.derive(kStreamU);
  for (int b = 0; b < B; ++b) {
    verify_impulse_inputs(*batch[b], model.gcfg.n_tx);
    fill_real_columns(bt, *batch[b], b, T);
    fill_fake_columns(bt, fakes[b], active, b, T);
    const double u = urng.uniform();
    for (int k = 0; k < n_trans; ++k)
      for (int a = 0; a < bt.n_rx; ++a)
        bt.interp[k][a].col(b) =
            u * bt.real[k][a].col(b) + (1.0 - u) * bt.fake[k][a].col(b);
  }

  const CriticPassResult res = critic_pass(model, bt, gp_lambda, false);
  BatchLoss out;
  out.critic_loss = res.critic_loss;
  out.gen_loss = -res.mean_fake;
  out.penalty = res.penalty;
  out.wdist = res.wdist;
  out.mean_grad_norm = res.mean_grad_norm;
  return out;
}

TrainResult train(GanModel& model, const Dataset& ds, const TrainConfig& cfg) {
  require(cfg.epochs >= 1 && cfg.critic_iters >= 1 && cfg.batch_size >= 1 &&
              cfg.gp_lambda >= 0.0,
          "train: config values must be positive");
  require(model.gcfg.n_rx == ds.config.channel.n_rx &&
              model.gcfg.n_tx == ds.config.channel.n_tx,
          "train: model/dataset MIMO size mismatch");
  require(model.dcfg.n_samples == ds.config.n_samples,
          "train: critic sample count != dataset T");
  require(!ds.split.train.empty(), "train: empty training split");
  require(static_cast<int>(ds.split.train.size()) >= cfg.batch_size,
          "train: training split smaller than one batch");

  const int T = ds.config.n_samples;
  const int B = cfg.batch_size;
  const std::vector<int> active = active_tx_list(ds.config.mode, model.gcfg.n_tx);
  const int n_trans = static_cast<int>(active.size());
  for (std::int64_t id : ds.split.train)
    verify_impulse_inputs(ds.measurements.at(static_cast<std::size_t>(id)),
                          model.gcfg.n_tx);

  // Validation reference PDP (observable statistic under the probing mode).
  Eigen::VectorXd val_pdp;
  PdpStats val_stats;
  const bool do_eval = cfg.eval_every > 0 && !ds.split.val.empty();
  require(!cfg.select_best || do_eval,
          "train: select_best needs eval_every > 0 and a validation split");
  if (do_eval) {
    val_pdp = observed_pdp_meas(ds, ds.split.val, cfg.max_val_measurements);
    val_stats = pdp_stats(val_pdp, ds.config.channel.sample_rate_hz);
  }

  AdamState adam_g(cfg.adam), adam_d(cfg.adam);
  adam_g.init(model.gen_params);
  adam_d.init(model.critic_params);

  const CounterRng root(cfg.seed);
  std::ofstream metrics_out;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::filesystem::create_directories(cfg.out_dir + "/checkpoints");
    metrics_out.open(cfg.out_dir + "/metrics.jsonl");
  }

  TrainResult result;
  std::uint64_t step = 0;
  int critic_since_gen = 0;
  double last_gen_loss = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  ParamStore best_gen, best_critic;

  BatchTensors bt;
  bt.n_trans = n_trans;
  bt.n_rx = model.gcfg.n_rx;
  bt.batch = B;
  bt.real.assign(n_trans, std::vector<ad::Mat>(bt.n_rx, ad::Mat(2 * T, B)));
  bt.fake = bt.real;
  bt.interp = bt.real;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::int64_t> order = ds.split.train;
    CounterRng srng = root.derive(kStreamShuffle).derive(epoch);
    shuffle(order, srng);
    const int n_batches = static_cast<int>(order.size()) / B;
    require(n_batches >= 1, "train: not enough data for one batch");

    EpochLog el;
    el.epoch = epoch;
    int gen_steps = 0;

    for (int ib = 0; ib < n_batches; ++ib) {
      const ad::Mat z = sample_z(model.gcfg.z_dim, B, root.derive(kStreamZ).derive(step));
      const std::vector<ChannelTensor> fakes = model.generate_batch(z);
      CounterRng urng = root.derive(kStreamU).derive(step);
      for (int b = 0; b < B; ++b) {
        const Measurement& m =
            ds.measurements.at(static_cast<std::size_t>(order[ib * B + b]));
        fill_real_columns(bt, m, b, T);
        fill_fake_columns(bt, fakes[b], active, b, T);
        const double u = urng.uniform();
        for (int k = 0; k < n_trans; ++k)
          for (int a = 0; a < bt.n_rx; ++a)
            bt.interp[k][a].col(b) =
                u * bt.real[k][a].col(b) + (1.0 - u) * bt.fake[k][a].col(b);
      }

      const CriticPassResult res = critic_pass(model, bt, cfg.gp_lambda, true);
      if (std::abs(res.critic_loss) > 1e6)
        throw numeric_error("train: critic loss diverged (|loss| > 1e6) at epoch " +
                            std::to_string(epoch) + ", wdist " +
                            std::to_string(res.wdist) + ", penalty " +
                            std::to_string(res.penalty));
      adam_d.step(model.critic_params, res.grads);
      ++step;
      ++critic_since_gen;

      el.critic_loss += res.critic_loss;
      el.penalty += res.penalty;
      el.wdist += res.wdist;
      el.mean_grad_norm += res.mean_grad_norm;

      if (critic_since_gen == cfg.critic_iters) {
        critic_since_gen = 0;
        const ad::Mat zg =
            sample_z(model.gcfg.z_dim, B, root.derive(kStreamZ).derive(step));
        ++step;
        const GenPassResult gres = gen_pass(model, zg, active, T, true);
        adam_g.step(model.gen_params, gres.grads);
        last_gen_loss = gres.gen_loss;
        ++gen_steps;
      }
    }

    el.critic_loss /= n_batches;
    el.penalty /= n_batches;
    el.wdist /= n_batches;
    el.mean_grad_norm /= n_batches;
    el.gen_loss = last_gen_loss;
    (void)gen_steps;

    if (do_eval && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs - 1)) {
      const ad::Mat z = sample_z(model.gcfg.z_dim, cfg.n_val_samples,
                                 root.derive(kStreamEval).derive(epoch));
      const Eigen::VectorXd gen_pdp =
          observed_pdp_gen(model.generate_batch(z), ds.config.mode, T);
      if (gen_pdp.maxCoeff() > 0.0) {
        const PdpStats gs = pdp_stats(gen_pdp, ds.config.channel.sample_rate_hz);
        const PdpMae mae = pdp_mae(gs, val_stats);
        el.val_avg_delay_mae_ns = mae.avg_delay_mae_us * 1e3;
        el.val_rms_mae_ns = mae.rms_mae_us * 1e3;
        el.val_power_mae_db = mae.power_mae_db;
        if (!std::isfinite(result.best_val_avg_delay_mae_ns) ||
            el.val_avg_delay_mae_ns < result.best_val_avg_delay_mae_ns)
          result.best_val_avg_delay_mae_ns = el.val_avg_delay_mae_ns;
        if (cfg.select_best) {
          const double score = el.val_avg_delay_mae_ns + el.val_rms_mae_ns +
                               100.0 * std::pow(10.0, el.val_power_mae_db / 10.0);
          if (score < best_score) {
            best_score = score;
            best_gen = model.gen_params;
            best_critic = model.critic_params;
            result.selected_epoch = epoch;
          }
        }
      }
    }

    result.log.push_back(el);
    if (metrics_out.is_open()) {
      metrics_out << el.to_json().dump() << "\n";
      metrics_out.flush();
    }
    if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 &&
        (epoch + 1) % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "/checkpoints/epoch_%05d.bin", epoch);
      model.save(cfg.out_dir + name, {{"epoch", epoch}});
    }
  }

  result.final_mean_grad_norm = result.log.back().mean_grad_norm;
  if (cfg.select_best && result.selected_epoch >= 0) {
    model.gen_params = std::move(best_gen);
    model.critic_params = std::move(best_critic);
  }
  if (!cfg.out_dir.empty())
    model.save(cfg.out_dir + "/checkpoints/final.bin",
               {{"epoch", result.selected_epoch >= 0 ? result.selected_epoch
                                                     : cfg.epochs - 1},
                {"train_config", to_json(cfg)}});
  return result;
}

}  // namespace mimogan
