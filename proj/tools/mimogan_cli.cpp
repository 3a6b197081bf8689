// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mimogan/bench.hpp"
#include "mimogan/gan.hpp"
#include "mimogan/metrics.hpp"

namespace fs = std::filesystem;
using mimogan::json;

namespace {

std::string data_dir() {
  if (const char* env = std::getenv("MIMOGAN_DATA_DIR")) return env;
  return MIMOGAN_DATA_DIR;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw mimogan::io_error(mimogan::io_error::kind::open, "cannot write " + path);
  f << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw mimogan::io_error(mimogan::io_error::kind::open, "cannot read " + path);
  return json::parse(f);
}

void write_manifest(const json& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_json_file(cfg, out_dir + "/manifest.json");
}

/// Channel config shared by the dataset and bench subcommands.
mimogan::ChannelRealizationConfig channel_from_args(const json& a) {
  mimogan::ChannelRealizationConfig c;
  const std::string mimo = a["mimo"].get<std::string>();
  const auto x = mimo.find('x');
  if (x == std::string::npos)
    throw mimogan::config_error("--mimo must look like 4x4 (n_tx x n_rx)");
  c.n_tx = std::stoi(mimo.substr(0, x));
  c.n_rx = std::stoi(mimo.substr(x + 1));
  c.n_taps = a["n_taps"].get<int>();
  c.sample_rate_hz = a["sample_rate_hz"].get<double>();
  c.rng_seed = a["seed"].get<std::uint64_t>();

  const std::string profile = a["profile"].get<std::string>();
  if (profile == "fixed") {
    c.profile = mimogan::TdlProfile::single_tap();
    c.correlation = mimogan::CorrelationConfig::identity(c.n_tx, c.n_rx);
    c.fixed_gain = mimogan::cd{a["fixed_gain"].get<double>(), 0.0};
    return c;
  }
  if (profile == "tdl-a")
    c.profile = mimogan::TdlProfile::load_csv(data_dir() + "/tdl_a.csv", "tdl-a",
                                              a["delay_spread_ns"].get<double>());
  else if (profile == "tdl-b")
    c.profile = mimogan::TdlProfile::load_csv(data_dir() + "/tdl_b.csv", "tdl-b",
                                              a["delay_spread_ns"].get<double>());
  else
    throw mimogan::config_error("unknown profile: " + profile +
                                " (expected tdl-a, tdl-b or fixed)");

  const std::string corr = a["correlation"].get<std::string>();
  if (corr == "identity") {
    c.correlation = mimogan::CorrelationConfig::identity(c.n_tx, c.n_rx);
  } else if (corr == "medium-a") {
    c.correlation.r_tx = mimogan::CorrelationConfig::load_csv(
        data_dir() + "/medium_a_tx" + std::to_string(c.n_tx) + ".csv");
    c.correlation.r_rx = mimogan::CorrelationConfig::load_csv(
        data_dir() + "/medium_a_rx" + std::to_string(c.n_rx) + ".csv");
  } else {
    throw mimogan::config_error("unknown correlation: " + corr +
                                " (expected medium-a or identity)");
  }
  return c;
}

int run_dataset(const json& a) {
  mimogan::DatasetConfig cfg;
  cfg.channel = channel_from_args(a);
  cfg.mode = mimogan::probing_mode_from_string(a["mode"].get<std::string>());
  cfg.count = a["count"].get<std::int64_t>();
  cfg.n_samples = a["n_samples"].get<int>();

  const std::string out_dir = a["out_dir"].get<std::string>();
  write_manifest(a, out_dir);
  mimogan::generate_dataset(cfg, out_dir + "/dataset.bin", a["threads"].get<int>());
  std::cout << "wrote " << out_dir << "/dataset.bin (" << cfg.count
            << " measurements)\n";
  return 0;
}

int run_train(const json& a) {
  const mimogan::Dataset ds = mimogan::load_dataset(a["dataset"].get<std::string>());

  mimogan::GeneratorConfig g;
  g.z_dim = a["z_dim"].get<int>();
  g.embed_dim = a["embed_dim"].get<int>();
  g.n_tx = ds.config.channel.n_tx;
  g.n_rx = ds.config.channel.n_rx;
  g.n_taps = ds.config.channel.n_taps;
  g.sample_rate_hz = ds.config.channel.sample_rate_hz;
  g.conditional = a["cond_g"].get<bool>();

  mimogan::CriticConfig d;
  d.embed_dim = a["embed_dim"].get<int>();
  d.n_rx = ds.config.channel.n_rx;
  d.n_samples = ds.config.n_samples;
  d.conditional = a["cond_d"].get<bool>();
  d.use_gram = a["use_gram"].get<bool>();

  mimogan::TrainConfig t;
  t.epochs = a["epochs"].get<int>();
  t.critic_iters = a["critic_iters"].get<int>();
  t.gp_lambda = a["gp_lambda"].get<double>();
  t.adam.lr = a["lr"].get<double>();
  t.batch_size = a["batch_size"].get<int>();
  t.seed = a["seed"].get<std::uint64_t>();
  t.eval_every = a["eval_every"].get<int>();
  t.checkpoint_every = a["checkpoint_every"].get<int>();
  t.select_best = a["select_best"].get<bool>();
  t.out_dir = a["out_dir"].get<std::string>();

  write_manifest(a, t.out_dir);
  mimogan::GanModel model = mimogan::GanModel::init(g, d, t.seed);
  const mimogan::TrainResult res = mimogan::train(model, ds, t);
  std::cout << "trained " << t.epochs << " epochs, "
            << model.param_count() << " parameters, best val avg-delay MAE "
            << res.best_val_avg_delay_mae_ns << " ns\n";
  if (res.selected_epoch >= 0)
    std::cout << "kept the epoch " << res.selected_epoch
              << " parameters (best validation score)\n";
  std::cout << "checkpoint: " << t.out_dir << "/checkpoints/final.bin\n";
  return 0;
}

void write_pdp_csv(const Eigen::VectorXd& pdp, double fs, const std::string& path) {
  std::ofstream f(path);
  f << "delay_us,power_linear\n";
  for (int t = 0; t < pdp.size(); ++t) {
    char line[64];
    std::snprintf(line, sizeof(line), "%.17g,%.17g\n", double(t) / fs * 1e6, pdp[t]);
    f << line;
  }
}

void write_corr_csv(const Eigen::MatrixXcd& m, const std::string& path) {
  std::ofstream f(path);
  f << "row,col,re,im\n";
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      char line[96];
      std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g\n", i, j, m(i, j).real(),
                    m(i, j).imag());
      f << line;
    }
}

json stats_json(const mimogan::PdpStats& s) {
  return {{"total_power_db", s.total_power_db},
          {"average_delay_us", s.average_delay_us},
          {"rms_delay_spread_us", s.rms_delay_spread_us},
          {"cutoff_db", s.cutoff_db}};
}

int run_eval(const json& a) {
  const mimogan::Dataset ds = mimogan::load_dataset(a["dataset"].get<std::string>());
  const double fs = ds.config.channel.sample_rate_hz;
  const std::string out_dir = a["out_dir"].get<std::string>();
  write_manifest(a, out_dir);
  fs::create_directories(out_dir + "/figures");

  // GT side: channels of the test split.
  std::vector<std::int64_t> ids = ds.split.test;
  const int max_gt = a["max_gt"].get<int>();
  if (static_cast<int>(ids.size()) > max_gt) ids.resize(max_gt);
  std::vector<mimogan::ChannelTensor> gt;
  if (ds.config.mode == mimogan::ProbingMode::Sequential) {
    gt = mimogan::channels_from_measurements(ds, ids);
  } else {
    for (std::int64_t id : ids) {
      const auto& m = ds.measurements.at(static_cast<std::size_t>(id));
      gt.push_back(mimogan::sample_channel(
          ds.config.channel, static_cast<std::uint64_t>(m.realization_id)));
    }
  }

  // Model side: checkpoint samples, or a second simulator seed (self test).
  const std::string ckpt = a["checkpoint"].get<std::string>();
  const int n_samples = a["n_samples"].get<int>();
  const std::uint64_t seed = a["seed"].get<std::uint64_t>();
  std::vector<mimogan::ChannelTensor> hyp;
  std::string hyp_kind;
  if (!ckpt.empty()) {
    hyp_kind = "checkpoint";
    const mimogan::GanModel model = mimogan::GanModel::load(ckpt);
    mimogan::require(model.gcfg.n_tx == ds.config.channel.n_tx &&
                         model.gcfg.n_rx == ds.config.channel.n_rx,
                     "eval: checkpoint/dataset MIMO size mismatch");
    mimogan::CounterRng rng = mimogan::CounterRng(seed).derive(23);
    mimogan::ad::Mat z(model.gcfg.z_dim, n_samples);
    for (int b = 0; b < n_samples; ++b)
      for (int i = 0; i < model.gcfg.z_dim; ++i) z(i, b) = rng.normal();
    hyp = model.generate_batch(z);
  } else {
    hyp_kind = "reference-reseeded";
    mimogan::ChannelRealizationConfig c2 = ds.config.channel;
    c2.rng_seed = seed;
    for (int r = 0; r < n_samples; ++r)
      hyp.push_back(mimogan::sample_channel(c2, static_cast<std::uint64_t>(r)));
  }

  const Eigen::VectorXd pdp_gt = mimogan::mean_pdp(gt);
  const Eigen::VectorXd pdp_hyp = mimogan::mean_pdp(hyp);
  const mimogan::PdpStats s_gt = mimogan::pdp_stats(pdp_gt, fs);
  const mimogan::PdpStats s_hyp = mimogan::pdp_stats(pdp_hyp, fs);
  const mimogan::PdpMae mae = mimogan::pdp_mae(s_hyp, s_gt);

  const mimogan::SpatialCorrReport corr_gt =
      mimogan::spatial_correlations(gt, ds.config.channel.correlation);
  const mimogan::SpatialCorrReport corr_hyp =
      mimogan::spatial_correlations(hyp, ds.config.channel.correlation);

  write_pdp_csv(pdp_gt, fs, out_dir + "/figures/pdp_gt.csv");
  write_pdp_csv(pdp_hyp, fs, out_dir + "/figures/pdp_model.csv");
  write_corr_csv(corr_gt.r_tx_hat, out_dir + "/figures/corr_tx_gt.csv");
  write_corr_csv(corr_gt.r_rx_hat, out_dir + "/figures/corr_rx_gt.csv");
  write_corr_csv(corr_hyp.r_tx_hat, out_dir + "/figures/corr_tx_model.csv");
  write_corr_csv(corr_hyp.r_rx_hat, out_dir + "/figures/corr_rx_model.csv");
  write_corr_csv(ds.config.channel.correlation.r_tx, out_dir + "/figures/corr_tx_ref.csv");
  write_corr_csv(ds.config.channel.correlation.r_rx, out_dir + "/figures/corr_rx_ref.csv");

  json report = {
      {"model_kind", hyp_kind},
      {"n_gt_realizations", gt.size()},
      {"n_model_realizations", hyp.size()},
      {"conventions",
       "delay stats over bins within 20 dB of the peak; power MAE is "
       "10*log10 of the absolute linear-power error, floored at -100 dB; "
       "correlation MAE averages |re err| and |im err| over all entries"},
      {"gt", stats_json(s_gt)},
      {"model", stats_json(s_hyp)},
      {"mae",
       {{"avg_delay_ns", mae.avg_delay_mae_us * 1e3},
        {"rms_delay_spread_ns", mae.rms_mae_us * 1e3},
        {"total_power_db", mae.power_mae_db}}},
      {"correlation",
       {{"gt", {{"mae_tx", corr_gt.mae_tx}, {"mae_rx", corr_gt.mae_rx}}},
        {"model", {{"mae_tx", corr_hyp.mae_tx}, {"mae_rx", corr_hyp.mae_rx}}},
        {"top_taps", corr_hyp.top_taps}}}};
  write_json_file(report, out_dir + "/report.json");
  std::cout << "avg-delay MAE " << mae.avg_delay_mae_us * 1e3 << " ns, rms MAE "
            << mae.rms_mae_us * 1e3 << " ns, power MAE " << mae.power_mae_db
            << " dB\nreport: " << out_dir << "/report.json\n";
  return 0;
}

int run_sample(const json& a) {
  const mimogan::GanModel model =
      mimogan::GanModel::load(a["checkpoint"].get<std::string>());
  const int n = a["count"].get<int>();
  mimogan::require(n >= 0, "sample: count must be >= 0");
  const std::string out_dir = a["out_dir"].get<std::string>();
  write_manifest(a, out_dir);

  mimogan::CounterRng rng = mimogan::CounterRng(a["seed"].get<std::uint64_t>()).derive(21);
  mimogan::ad::Mat z(model.gcfg.z_dim, n);
  for (int b = 0; b < n; ++b)
    for (int i = 0; i < model.gcfg.z_dim; ++i) z(i, b) = rng.normal();
  mimogan::save_channels(model.generate_batch(z), out_dir + "/channels.bin");
  std::cout << "wrote " << out_dir << "/channels.bin (" << n << " realizations)\n";
  return 0;
}

int run_bench_cmd(const json& a) {
  const std::string ckpt = a["checkpoint"].get<std::string>();
  if (ckpt.empty()) throw mimogan::config_error("bench: --checkpoint is required");
  const mimogan::GanModel model = mimogan::GanModel::load(ckpt);

  json ch = a;
  ch["mimo"] = std::to_string(model.gcfg.n_tx) + "x" + std::to_string(model.gcfg.n_rx);
  mimogan::BenchConfig b;
  b.n_runs = a["n_runs"].get<int>();
  b.warmup_runs = a["warmup_runs"].get<int>();
  b.batch_size = a["batch_size"].get<int>();
  b.n_samples = a["n_samples"].get<int>();
  b.seed = a["seed"].get<std::uint64_t>();

  const std::string out_dir = a["out_dir"].get<std::string>();
  write_manifest(a, out_dir);
  const mimogan::BenchReport rep = mimogan::run_bench(channel_from_args(ch), model, b);
  write_json_file(rep.to_json(), out_dir + "/report.json");

  // Deterministic digest of the simulated outputs (timings are not).
  mimogan::CounterRng zr = mimogan::CounterRng(b.seed).derive(2);
  const int total =
      ((b.warmup_runs + b.batch_size - 1) / b.batch_size) * b.batch_size + b.n_runs;
  mimogan::ad::Mat z(model.gcfg.z_dim, total);
  for (int c = 0; c < total; ++c)
    for (int i = 0; i < model.gcfg.z_dim; ++i) z(i, c) = zr.normal();
  const std::vector<mimogan::ChannelTensor> hs =
      model.generate_batch(z.rightCols(b.n_runs));
  std::uint32_t crc = 0;
  for (const mimogan::ChannelTensor& h : hs)
    crc ^= mimogan::crc32_of(h.data.data(), h.data.size() * sizeof(mimogan::cd));
  write_json_file({{"outputs_crc32", crc}, {"n_runs", b.n_runs}},
                  out_dir + "/outputs_digest.json");

  std::cout << "gan batching speedup: " << rep.gan_batch_speedup
            << "x, timed==untimed: " << (rep.timed_matches_untimed ? "yes" : "no")
            << "\nreport: " << out_dir << "/report.json\n";
  return 0;
}

int dispatch(const std::string& cmd, const json& a) {
  if (cmd == "dataset") return run_dataset(a);
  if (cmd == "train") return run_train(a);
  if (cmd == "eval") return run_eval(a);
  if (cmd == "sample") return run_sample(a);
  if (cmd == "bench") return run_bench_cmd(a);
  throw mimogan::config_error("unknown subcommand in manifest: " + cmd);
}

struct ChannelArgs {
  std::string profile = "tdl-a";
  std::string mimo = "1x1";
  std::string correlation = "medium-a";
  double delay_spread_ns = 300.0;
  double sample_rate_hz = 30.72e6;
  int n_taps = 128;
  double fixed_gain = 1.0;
};

void add_channel_flags(CLI::App* c, ChannelArgs& ch) {
  c->add_option("--profile", ch.profile, "tdl-a | tdl-b | fixed")
      ->capture_default_str();
  c->add_option("--mimo", ch.mimo, "antenna layout, n_tx x n_rx (e.g. 4x4)")
      ->capture_default_str();
  c->add_option("--correlation", ch.correlation, "medium-a | identity")
      ->capture_default_str();
  c->add_option("--delay-spread-ns", ch.delay_spread_ns)->capture_default_str();
  c->add_option("--sample-rate-hz", ch.sample_rate_hz)->capture_default_str();
  c->add_option("--n-taps", ch.n_taps)->capture_default_str();
  c->add_option("--fixed-gain", ch.fixed_gain, "tap gain for --profile fixed")
      ->capture_default_str();
}

json channel_args_json(const ChannelArgs& ch) {
  return {{"profile", ch.profile},
          {"mimo", ch.mimo},
          {"correlation", ch.correlation},
          {"delay_spread_ns", ch.delay_spread_ns},
          {"sample_rate_hz", ch.sample_rate_hz},
          {"n_taps", ch.n_taps},
          {"fixed_gain", ch.fixed_gain}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO channel GAN toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--seed", seed, "master RNG seed")->capture_default_str();
    c->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    c->add_option("--threads", threads)->capture_default_str();
    c->set_config("--config");
  };

  // dataset
  auto* c_dataset = app.add_subcommand("dataset", "generate a probing dataset");
  ChannelArgs ds_ch;
  std::string ds_mode = "sequential";
  std::int64_t ds_count = 60000;
  int ds_samples = 128;
  add_common(c_dataset);
  add_channel_flags(c_dataset, ds_ch);
  c_dataset->add_option("--mode", ds_mode, "sequential | simultaneous")
      ->capture_default_str();
  c_dataset->add_option("--count", ds_count, "number of measurements")
      ->capture_default_str();
  c_dataset->add_option("--n-samples", ds_samples, "samples per waveform (T)")
      ->capture_default_str();

  // train
  auto* c_train = app.add_subcommand("train", "train a model on a dataset");
  std::string tr_dataset, tr_preset;
  int tr_epochs = 500, tr_batch = 256, tr_critic = 25, tr_zdim = 32, tr_embed = 4;
  int tr_eval_every = 5, tr_ckpt_every = 0;
  double tr_lr = 2e-4, tr_lambda = 10.0;
  bool tr_cond_g = true, tr_cond_d = true, tr_gram = true, tr_select_best = false;
  add_common(c_train);
  c_train->add_option("--dataset", tr_dataset, "dataset.bin path")->required();
  c_train->add_option("--preset", tr_preset,
                      "desk-1x1 | desk-2x2 | desk-4x4 | paper-4x4");
  c_train->add_option("--epochs", tr_epochs)->capture_default_str();
  c_train->add_option("--batch-size", tr_batch)->capture_default_str();
  c_train->add_option("--critic-iters", tr_critic)->capture_default_str();
  c_train->add_option("--lr", tr_lr)->capture_default_str();
  c_train->add_option("--gp-lambda", tr_lambda)->capture_default_str();
  c_train->add_option("--z-dim", tr_zdim)->capture_default_str();
  c_train->add_option("--embed-dim", tr_embed)->capture_default_str();
  c_train->add_option("--eval-every", tr_eval_every)->capture_default_str();
  c_train->add_option("--checkpoint-every", tr_ckpt_every)->capture_default_str();
  c_train->add_option("--cond-g", tr_cond_g, "conditioned generator")
      ->capture_default_str();
  c_train->add_option("--cond-d", tr_cond_d, "conditioned critic")
      ->capture_default_str();
  c_train->add_option("--use-gram", tr_gram, "gram side input (GM)")
      ->capture_default_str();
  c_train->add_option("--select-best", tr_select_best,
                      "keep the best-validation parameters instead of the last epoch")
      ->capture_default_str();

  // eval
  auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint against a dataset");
  std::string ev_dataset, ev_ckpt;
  int ev_samples = 2048, ev_max_gt = 4000;
  add_common(c_eval);
  c_eval->add_option("--dataset", ev_dataset)->required();
  c_eval->add_option("--checkpoint", ev_ckpt,
                     "model checkpoint; empty reruns the simulator reseeded");
  c_eval->add_option("--n-samples", ev_samples, "model realizations to draw")
      ->capture_default_str();
  c_eval->add_option("--max-gt", ev_max_gt, "cap on test-split realizations")
      ->capture_default_str();

  // sample
  auto* c_sample = app.add_subcommand("sample", "dump generated channel tensors");
  std::string sm_ckpt;
  int sm_count = 16;
  add_common(c_sample);
  c_sample->add_option("--checkpoint", sm_ckpt)->required();
  c_sample->add_option("--count", sm_count)->capture_default_str();

  // bench
  auto* c_bench = app.add_subcommand("bench", "time reference vs model simulation");
  ChannelArgs bn_ch;
  std::string bn_ckpt;
  int bn_runs = 2048, bn_warmup = 16, bn_batch = 256, bn_samples = 128;
  add_common(c_bench);
  add_channel_flags(c_bench, bn_ch);
  c_bench->add_option("--checkpoint", bn_ckpt)->required();
  c_bench->add_option("--n-runs", bn_runs)->capture_default_str();
  c_bench->add_option("--warmup-runs", bn_warmup)->capture_default_str();
  c_bench->add_option("--batch-size", bn_batch)->capture_default_str();
  c_bench->add_option("--n-samples", bn_samples)->capture_default_str();

  // rerun
  auto* c_rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
  std::string rr_manifest;
  c_rerun->add_option("--manifest", rr_manifest)->required();
  std::string rr_out;
  c_rerun->add_option("--out-dir", rr_out, "override the manifest output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_dataset->parsed()) {
      json a = channel_args_json(ds_ch);
      a["seed"] = seed;
      a["out_dir"] = out_dir;
      a["threads"] = threads;
      a["mode"] = ds_mode;
      a["count"] = ds_count;
      a["n_samples"] = ds_samples;
      a["subcommand"] = "dataset";
      return run_dataset(a);
    }
    if (c_train->parsed()) {
      if (!tr_preset.empty()) {
        // Desk presets trade the full-scale recipe (batch 256, 25 critic
        // iterations per generator step) for many more generator updates per
        // epoch, plus best-validation selection; explicit flags still win.
        int ep, batch, critic;
        bool best;
        if (tr_preset == "desk-1x1") ep = 200, batch = 64, critic = 5, best = true;
        else if (tr_preset == "desk-2x2") ep = 250, batch = 32, critic = 5, best = true;
        else if (tr_preset == "desk-4x4") ep = 300, batch = 32, critic = 5, best = true;
        else if (tr_preset == "paper-4x4") ep = 500, batch = 256, critic = 25, best = false;
        else throw mimogan::config_error("unknown preset: " + tr_preset);
        if (c_train->count("--epochs") == 0) tr_epochs = ep;
        if (c_train->count("--batch-size") == 0) tr_batch = batch;
        if (c_train->count("--critic-iters") == 0) tr_critic = critic;
        if (c_train->count("--select-best") == 0) tr_select_best = best;
      }
      json a = {{"subcommand", "train"},  {"dataset", tr_dataset},
                {"seed", seed},           {"out_dir", out_dir},
                {"threads", threads},     {"epochs", tr_epochs},
                {"batch_size", tr_batch}, {"critic_iters", tr_critic},
                {"lr", tr_lr},            {"gp_lambda", tr_lambda},
                {"z_dim", tr_zdim},       {"embed_dim", tr_embed},
                {"eval_every", tr_eval_every},
                {"checkpoint_every", tr_ckpt_every},
                {"cond_g", tr_cond_g},    {"cond_d", tr_cond_d},
                {"use_gram", tr_gram},    {"select_best", tr_select_best}};
      return run_train(a);
    }
    if (c_eval->parsed()) {
      json a = {{"subcommand", "eval"},   {"dataset", ev_dataset},
                {"checkpoint", ev_ckpt},  {"seed", seed},
                {"out_dir", out_dir},     {"threads", threads},
                {"n_samples", ev_samples}, {"max_gt", ev_max_gt}};
      return run_eval(a);
    }
    if (c_sample->parsed()) {
      json a = {{"subcommand", "sample"}, {"checkpoint", sm_ckpt},
                {"count", sm_count},      {"seed", seed},
                {"out_dir", out_dir},     {"threads", threads}};
      return run_sample(a);
    }
    if (c_bench->parsed()) {
      json a = channel_args_json(bn_ch);
      a["subcommand"] = "bench";
      a["checkpoint"] = bn_ckpt;
      a["seed"] = seed;
      a["out_dir"] = out_dir;
      a["threads"] = threads;
      a["n_runs"] = bn_runs;
      a["warmup_runs"] = bn_warmup;
      a["batch_size"] = bn_batch;
      a["n_samples"] = bn_samples;
      return run_bench_cmd(a);
    }
    if (c_rerun->parsed()) {
      json a = read_json_file(rr_manifest);
      if (!a.contains("subcommand"))
        throw mimogan::config_error("manifest has no subcommand field");
      if (!rr_out.empty()) a["out_dir"] = rr_out;
      return dispatch(a["subcommand"].get<std::string>(), a);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
