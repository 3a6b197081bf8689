// SPDX-License-Identifier: Apache-2.0
#include "mimogan/dataset.hpp"

#include <cstring>
#include <numeric>
#include <thread>

namespace mimogan {

namespace {

constexpr char kDatasetMagic[8] = {'M', 'G', 'M', 'E', 'A', 'S', '0', '1'};
constexpr char kChannelMagic[8] = {'M', 'G', 'C', 'H', 'A', 'N', '1', '\0'};
constexpr std::uint32_t kVersion = 1;

// Named RNG streams hanging off the dataset seed.
constexpr std::uint64_t kStreamSplit = 0x53504c49;  // "SPLI"

void append_waveform_f32(std::vector<float>& buf, const Waveform& w) {
  for (int a = 0; a < w.antennas(); ++a)
    for (int n = 0; n < w.samples(); ++n) {
      buf.push_back(static_cast<float>(w.data(a, n).real()));
      buf.push_back(static_cast<float>(w.data(a, n).imag()));
    }
}

Waveform read_waveform_f32(const float*& p, int antennas, int samples, double fs) {
  Waveform w(antennas, samples, fs);
  for (int a = 0; a < antennas; ++a)
    for (int n = 0; n < samples; ++n) {
      const float re = *p++;
      const float im = *p++;
      w.data(a, n) = cd{re, im};
    }
  return w;
}

}  // namespace

const char* to_string(ProbingMode m) {
  return m == ProbingMode::Sequential ? "sequential" : "simultaneous";
}

ProbingMode probing_mode_from_string(const std::string& s) {
  if (s == "sequential") return ProbingMode::Sequential;
  if (s == "simultaneous") return ProbingMode::Simultaneous;
  throw config_error("unknown probing mode: " + s);
}

std::vector<Waveform> make_probe(ProbingMode mode, int n_tx, int T, double fs) {
  require(n_tx >= 1 && T >= 1, "make_probe: n_tx and T must be positive");
  std::vector<Waveform> probes;
  if (mode == ProbingMode::Sequential) {
    for (int k = 0; k < n_tx; ++k) {
      Waveform w(n_tx, T, fs);
      w.data(k, 0) = cd{1.0, 0.0};
      probes.push_back(std::move(w));
    }
  } else {
    Waveform w(n_tx, T, fs);
    for (int j = 0; j < n_tx; ++j) w.data(j, 0) = cd{1.0, 0.0};
    probes.push_back(std::move(w));
  }
  return probes;
}

DatasetSplit derive_split(std::int64_t count, std::uint64_t seed) {
  std::vector<std::int64_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng = CounterRng(seed).derive(kStreamSplit);
  shuffle(idx, rng);
  const auto n_train = static_cast<std::int64_t>(count * 6 / 10);
  const auto n_val = static_cast<std::int64_t>(count * 2 / 10);
  DatasetSplit s;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  s.test.assign(idx.begin() + n_train + n_val, idx.end());
  return s;
}

json to_json(const ChannelRealizationConfig& cfg) {
  json j;
  j["profile"] = {{"name", cfg.profile.name},
                  {"delays_norm", cfg.profile.delays_norm},
                  {"powers_db", cfg.profile.powers_db},
                  {"delay_spread_ns", cfg.profile.delay_spread_ns}};
  auto mat_json = [](const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int jj = 0; jj < m.cols(); ++jj)
        row.push_back({m(i, jj).real(), m(i, jj).imag()});
      rows.push_back(row);
    }
    return rows;
  };
  j["r_tx"] = mat_json(cfg.correlation.r_tx);
  j["r_rx"] = mat_json(cfg.correlation.r_rx);
  j["n_tx"] = cfg.n_tx;
  j["n_rx"] = cfg.n_rx;
  j["n_taps"] = cfg.n_taps;
  j["sample_rate_hz"] = cfg.sample_rate_hz;
  j["rng_seed"] = cfg.rng_seed;
  if (cfg.fixed_gain)
    j["fixed_gain"] = {cfg.fixed_gain->real(), cfg.fixed_gain->imag()};
  return j;
}

ChannelRealizationConfig channel_config_from_json(const json& j) {
  ChannelRealizationConfig cfg;
  cfg.profile.name = j["profile"]["name"].get<std::string>();
  cfg.profile.delays_norm = j["profile"]["delays_norm"].get<std::vector<double>>();
  cfg.profile.powers_db = j["profile"]["powers_db"].get<std::vector<double>>();
  cfg.profile.delay_spread_ns = j["profile"]["delay_spread_ns"].get<double>();
  auto mat_from = [](const json& rows) {
    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj)
        m(i, jj) = cd{rows[i][jj][0].get<double>(), rows[i][jj][1].get<double>()};
    return m;
  };
  cfg.correlation.r_tx = mat_from(j["r_tx"]);
  cfg.correlation.r_rx = mat_from(j["r_rx"]);
  cfg.n_tx = j["n_tx"].get<int>();
  cfg.n_rx = j["n_rx"].get<int>();
  cfg.n_taps = j["n_taps"].get<int>();
  cfg.sample_rate_hz = j["sample_rate_hz"].get<double>();
  cfg.rng_seed = j["rng_seed"].get<std::uint64_t>();
  if (j.contains("fixed_gain"))
    cfg.fixed_gain = cd{j["fixed_gain"][0].get<double>(), j["fixed_gain"][1].get<double>()};
  return cfg;
}

json to_json(const DatasetConfig& cfg) {
  json j;
  j["channel"] = to_json(cfg.channel);
  j["mode"] = to_string(cfg.mode);
  j["count"] = cfg.count;
  j["n_samples"] = cfg.n_samples;
  return j;
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig cfg;
  cfg.channel = channel_config_from_json(j["channel"]);
  cfg.mode = probing_mode_from_string(j["mode"].get<std::string>());
  cfg.count = j["count"].get<std::int64_t>();
  cfg.n_samples = j["n_samples"].get<int>();
  return cfg;
}

namespace {

Measurement make_measurement(const DatasetConfig& cfg, std::int64_t r,
                             const std::vector<Waveform>& probes) {
  Measurement m;
  m.realization_id = r;
  m.mode = cfg.mode;
  const ChannelTensor h = sample_channel(cfg.channel, static_cast<std::uint64_t>(r));
  m.inputs = probes;
  for (const Waveform& x : probes) m.outputs.push_back(apply_channel(h, x));
  return m;
}

}  // namespace

void generate_dataset(const DatasetConfig& cfg, const std::string& path, int threads) {
  require(cfg.count >= 1, "generate_dataset: count must be positive");
  require(cfg.n_samples >= 1, "generate_dataset: n_samples must be positive");
  cfg.channel.validate();

  const json cfg_json = to_json(cfg);
  const std::string cfg_dump = cfg_json.dump();
  const DatasetSplit split = derive_split(cfg.count, cfg.channel.rng_seed);

  json manifest;
  manifest["format"] = "mimogan-dataset";
  manifest["config"] = cfg_json;
  manifest["config_crc32"] = crc32_of(cfg_dump.data(), cfg_dump.size());
  manifest["split_seed"] = cfg.channel.rng_seed;
  manifest["split"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};

  SectionWriter out(path, kDatasetMagic, kVersion);
  out.write_json(manifest);

  const std::vector<Waveform> probes =
      make_probe(cfg.mode, cfg.channel.n_tx, cfg.n_samples, cfg.channel.sample_rate_hz);

  const int nthreads = std::max(1, threads);
  const std::int64_t chunk = std::max<std::int64_t>(std::int64_t(nthreads) * 8, 1);
  std::vector<std::vector<float>> bufs;
  for (std::int64_t base = 0; base < cfg.count; base += chunk) {
    const std::int64_t n = std::min<std::int64_t>(chunk, cfg.count - base);
    bufs.assign(n, {});
    auto work = [&](int tid) {
      for (std::int64_t k = tid; k < n; k += nthreads) {
        const Measurement m = make_measurement(cfg, base + k, probes);
        for (std::size_t t = 0; t < m.inputs.size(); ++t) {
          append_waveform_f32(bufs[k], m.inputs[t]);
          append_waveform_f32(bufs[k], m.outputs[t]);
        }
      }
    };
    if (nthreads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    // Single ordered writer.
    for (std::int64_t k = 0; k < n; ++k)
      out.write_section(bufs[k].data(), bufs[k].size() * sizeof(float));
  }
  out.close();
}

Dataset load_dataset(const std::string& path) {
  SectionReader in(path, kDatasetMagic, kVersion);
  Dataset ds;
  ds.manifest = in.read_json();
  ds.config = dataset_config_from_json(ds.manifest["config"]);
  ds.split.train = ds.manifest["split"]["train"].get<std::vector<std::int64_t>>();
  ds.split.val = ds.manifest["split"]["val"].get<std::vector<std::int64_t>>();
  ds.split.test = ds.manifest["split"]["test"].get<std::vector<std::int64_t>>();

  const int n_tx = ds.config.channel.n_tx;
  const int n_rx = ds.config.channel.n_rx;
  const int T = ds.config.n_samples;
  const double fs = ds.config.channel.sample_rate_hz;
  const int n_trans = ds.config.mode == ProbingMode::Sequential ? n_tx : 1;
  const std::size_t expect =
      static_cast<std::size_t>(n_trans) * (n_tx + n_rx) * T * 2 * sizeof(float);

  ds.measurements.reserve(ds.config.count);
  for (std::int64_t r = 0; r < ds.config.count; ++r) {
    const std::vector<char> raw = in.read_section();
    if (raw.size() != expect)
      throw io_error(io_error::kind::truncated,
                     "measurement " + std::to_string(r) + " has unexpected size in " + path);
    const float* p = reinterpret_cast<const float*>(raw.data());
    Measurement m;
    m.realization_id = r;
    m.mode = ds.config.mode;
    for (int t = 0; t < n_trans; ++t) {
      m.inputs.push_back(read_waveform_f32(p, n_tx, T, fs));
      m.outputs.push_back(read_waveform_f32(p, n_rx, T, fs));
    }
    ds.measurements.push_back(std::move(m));
  }
  return ds;
}

void save_channels(const std::vector<ChannelTensor>& hs, const std::string& path) {
  SectionWriter out(path, kChannelMagic, kVersion);
  json meta;
  meta["count"] = hs.size();
  if (!hs.empty()) {
    meta["n_rx"] = hs[0].n_rx;
    meta["n_tx"] = hs[0].n_tx;
    meta["n_taps"] = hs[0].n_taps;
    meta["sample_rate_hz"] = hs[0].sample_rate_hz;
  }
  out.write_json(meta);
  for (const ChannelTensor& h : hs)
    out.write_section(h.data.data(), h.data.size() * sizeof(cd));
  out.close();
}

std::vector<ChannelTensor> load_channels(const std::string& path) {
  SectionReader in(path, kChannelMagic, kVersion);
  const json meta = in.read_json();
  const std::size_t count = meta["count"].get<std::size_t>();
  std::vector<ChannelTensor> hs;
  for (std::size_t k = 0; k < count; ++k) {
    ChannelTensor h(meta["n_rx"].get<int>(), meta["n_tx"].get<int>(),
                    meta["n_taps"].get<int>(), meta["sample_rate_hz"].get<double>());
    const std::vector<char> raw = in.read_section();
    if (raw.size() != h.data.size() * sizeof(cd))
      throw io_error(io_error::kind::truncated, "bad channel record in " + path);
    std::memcpy(h.data.data(), raw.data(), raw.size());
    hs.push_back(std::move(h));
  }
  return hs;
}

}  // namespace mimogan
