// SPDX-License-Identifier: Apache-2.0
#include "mimogan/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstring>

namespace mimogan {

namespace {

constexpr std::uint64_t kStreamInput = 1;
constexpr std::uint64_t kStreamZ = 2;

using clock_t_ = std::chrono::steady_clock;

double ms_since(clock_t_::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_t_::now() - t0).count();
}

struct Samples {
  std::vector<double> per_sim_ms;  // one entry per timing unit (run or chunk)
  double sample_ms_total = 0.0;
  double apply_ms_total = 0.0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / double(v.size() - 1));
}

bool same_bytes(const Waveform& a, const Waveform& b) {
  if (a.antennas() != b.antennas() || a.samples() != b.samples()) return false;
  return std::memcmp(a.data.data(), b.data.data(),
                     sizeof(cd) * static_cast<std::size_t>(a.data.size())) == 0;
}

bool same_bytes(const std::vector<Waveform>& a, const std::vector<Waveform>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_bytes(a[i], b[i])) return false;
  return true;
}

std::vector<Waveform> run_reference(const ChannelRealizationConfig& cfg,
                                    const Waveform& x, int n_runs, int warmup,
                                    Samples* timing) {
  std::vector<Waveform> out;
  out.reserve(n_runs);
  for (int r = 0; r < warmup + n_runs; ++r) {
    const bool timed = timing != nullptr && r >= warmup;
    const auto t0 = clock_t_::now();
    const ChannelTensor h = sample_channel(cfg, static_cast<std::uint64_t>(r));
    const double t_sample = ms_since(t0);
    const auto t1 = clock_t_::now();
    Waveform y = apply_channel(h, x);
    const double t_apply = ms_since(t1);
    if (timed) {
      timing->per_sim_ms.push_back(t_sample + t_apply);
      timing->sample_ms_total += t_sample;
      timing->apply_ms_total += t_apply;
    }
    if (r >= warmup) out.push_back(std::move(y));
  }
  return out;
}

std::vector<Waveform> run_gan_unbatched(const GanModel& model, const ad::Mat& z,
                                        const Waveform& x, int warmup,
                                        Samples* timing) {
  const int total = static_cast<int>(z.cols());
  std::vector<Waveform> out;
  out.reserve(total - warmup);
  for (int r = 0; r < total; ++r) {
    const bool timed = timing != nullptr && r >= warmup;
    const auto t0 = clock_t_::now();
    const ChannelTensor h = model.generate_channel(z.col(r));
    const double t_sample = ms_since(t0);
    const auto t1 = clock_t_::now();
    Waveform y = apply_channel(h, x);
    const double t_apply = ms_since(t1);
    if (timed) {
      timing->per_sim_ms.push_back(t_sample + t_apply);
      timing->sample_ms_total += t_sample;
      timing->apply_ms_total += t_apply;
    }
    if (r >= warmup) out.push_back(std::move(y));
  }
  return out;
}

std::vector<Waveform> run_gan_batched(const GanModel& model, const ad::Mat& z,
                                      const Waveform& x, int warmup, int chunk,
                                      Samples* timing) {
  const int total = static_cast<int>(z.cols());
  std::vector<Waveform> out;
  out.reserve(total - warmup);
  for (int start = 0; start < total; start += chunk) {
    const int n = std::min(chunk, total - start);
    const bool timed = timing != nullptr && start >= warmup;
    const auto t0 = clock_t_::now();
    std::vector<Waveform> ys = model.simulate_batch(z.middleCols(start, n), x);
    const double t_total = ms_since(t0);
    if (timed) {
      timing->per_sim_ms.push_back(t_total / n);
      timing->sample_ms_total += t_total;  // fused: no sample/apply split
    }
    if (start >= warmup)
      for (Waveform& y : ys) out.push_back(std::move(y));
  }
  return out;
}

BenchRow make_row(const std::string& system, const Samples& s, int n_sims) {
  BenchRow row;
  row.system = system;
  row.mean_ms = mean_of(s.per_sim_ms);
  row.std_ms = std_of(s.per_sim_ms, row.mean_ms);
  row.sample_ms = s.sample_ms_total / n_sims;
  row.apply_ms = s.apply_ms_total / n_sims;
  return row;
}

}  // namespace

json BenchReport::to_json() const {
  json rows_j = json::array();
  for (const BenchRow& r : rows)
    rows_j.push_back({{"system", r.system},
                      {"mean_ms", r.mean_ms},
                      {"std_ms", r.std_ms},
                      {"sample_ms", r.sample_ms},
                      {"apply_ms", r.apply_ms},
                      {"speedup_vs_reference", r.speedup_vs_reference}});
  return {{"note", note},
          {"n_runs", n_runs},
          {"warmup_runs", warmup_runs},
          {"batch_size", batch_size},
          {"n_tx", n_tx},
          {"n_rx", n_rx},
          {"rows", rows_j},
          {"gan_batch_speedup", gan_batch_speedup},
          {"timed_matches_untimed", timed_matches_untimed}};
}

BenchReport run_bench(const ChannelRealizationConfig& ref_cfg, const GanModel& model,
                      const BenchConfig& cfg) {
  require(cfg.n_runs >= 30, "bench: n_runs must be >= 30");
  require(cfg.warmup_runs >= 0 && cfg.batch_size >= 1 && cfg.n_samples >= 1,
          "bench: config values out of range");
  require(model.gcfg.n_tx == ref_cfg.n_tx && model.gcfg.n_rx == ref_cfg.n_rx,
          "bench: model/reference MIMO size mismatch");
  ref_cfg.validate();

  const CounterRng root(cfg.seed);
  Waveform x(ref_cfg.n_tx, cfg.n_samples, ref_cfg.sample_rate_hz);
  CounterRng xr = root.derive(kStreamInput);
  for (int j = 0; j < x.antennas(); ++j)
    for (int n = 0; n < x.samples(); ++n) x.data(j, n) = xr.cnormal();

  // Warmup for the batched path is rounded up to whole chunks.
  const int warmup_b = ((cfg.warmup_runs + cfg.batch_size - 1) / cfg.batch_size) *
                       cfg.batch_size;
  CounterRng zr = root.derive(kStreamZ);
  ad::Mat z(model.gcfg.z_dim, warmup_b + cfg.n_runs);
  for (int b = 0; b < z.cols(); ++b)
    for (int i = 0; i < z.rows(); ++i) z(i, b) = zr.normal();
  const ad::Mat z_u = z.rightCols(cfg.warmup_runs + cfg.n_runs);

  BenchReport rep;
  rep.note =
      "baseline is this library's reference simulator; absolute speedups are "
      "not comparable across toolchains, only the batching effect is";
  rep.n_runs = cfg.n_runs;
  rep.warmup_runs = cfg.warmup_runs;
  rep.batch_size = cfg.batch_size;
  rep.n_tx = ref_cfg.n_tx;
  rep.n_rx = ref_cfg.n_rx;

  Samples s_ref, s_unb, s_bat;
  const std::vector<Waveform> y_ref =
      run_reference(ref_cfg, x, cfg.n_runs, cfg.warmup_runs, &s_ref);
  const std::vector<Waveform> y_unb =
      run_gan_unbatched(model, z_u, x, cfg.warmup_runs, &s_unb);
  const std::vector<Waveform> y_bat =
      run_gan_batched(model, z, x, warmup_b, cfg.batch_size, &s_bat);

  const std::vector<Waveform> y_ref2 =
      run_reference(ref_cfg, x, cfg.n_runs, cfg.warmup_runs, nullptr);
  const std::vector<Waveform> y_unb2 =
      run_gan_unbatched(model, z_u, x, cfg.warmup_runs, nullptr);
  const std::vector<Waveform> y_bat2 =
      run_gan_batched(model, z, x, warmup_b, cfg.batch_size, nullptr);
  rep.timed_matches_untimed = same_bytes(y_ref, y_ref2) &&
                              same_bytes(y_unb, y_unb2) && same_bytes(y_bat, y_bat2);

  rep.rows.push_back(make_row("reference", s_ref, cfg.n_runs));
  rep.rows.push_back(make_row("gan-unbatched", s_unb, cfg.n_runs));
  rep.rows.push_back(make_row("gan-batched", s_bat, cfg.n_runs));
  const double ref_mean = rep.rows[0].mean_ms;
  for (BenchRow& r : rep.rows) r.speedup_vs_reference = ref_mean / r.mean_ms;
  rep.gan_batch_speedup = rep.rows[1].mean_ms / rep.rows[2].mean_ms;
  return rep;
}

}  // namespace mimogan
