// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mimogan/channel.hpp"
#include "mimogan/io.hpp"

namespace mimogan {

enum class ProbingMode { Sequential, Simultaneous };

const char* to_string(ProbingMode m);
ProbingMode probing_mode_from_string(const std::string& s);

/// One channel realization's probing record.  Under Sequential mode the
/// measurement bundles n_tx transmissions through the SAME realization;
/// under Simultaneous mode there is a single transmission.
struct Measurement {
  std::int64_t realization_id = 0;
  ProbingMode mode = ProbingMode::Sequential;
  std::vector<Waveform> inputs;   // one per transmission, n_tx x T
  std::vector<Waveform> outputs;  // one per transmission, n_rx x T
};

struct DatasetSplit {
  std::vector<std::int64_t> train, val, test;
};

/// Unit-power impulse probes: Sequential -> n_tx waveforms (impulse at n=0 on
/// antenna k of waveform k), Simultaneous -> one waveform, impulse on all.
std::vector<Waveform> make_probe(ProbingMode mode, int n_tx, int T,
                                 double sample_rate_hz = 30.72e6);

struct DatasetConfig {
  ChannelRealizationConfig channel;
  ProbingMode mode = ProbingMode::Sequential;
  std::int64_t count = 60000;
  int n_samples = 128;  // T
};

/// 60/20/20 shuffle split, derived deterministically from the seed.
DatasetSplit derive_split(std::int64_t count, std::uint64_t seed);

/// Generates `count` measurements (fresh realization each) and writes the
/// binary container.  Deterministic in the config, regardless of `threads`.
void generate_dataset(const DatasetConfig& cfg, const std::string& path, int threads = 1);

struct Dataset {
  DatasetConfig config;
  DatasetSplit split;
  std::vector<Measurement> measurements;
  json manifest;
};

Dataset load_dataset(const std::string& path);

/// Channel tensor dump files (cmd_sample output).
void save_channels(const std::vector<ChannelTensor>& hs, const std::string& path);
std::vector<ChannelTensor> load_channels(const std::string& path);

json to_json(const ChannelRealizationConfig& cfg);
ChannelRealizationConfig channel_config_from_json(const json& j);
json to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const json& j);

}  // namespace mimogan
