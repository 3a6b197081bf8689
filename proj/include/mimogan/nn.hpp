// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mimogan/autodiff.hpp"
#include "mimogan/io.hpp"
#include "mimogan/rng.hpp"

namespace mimogan {

/// Insertion-ordered named parameter matrices.
struct ParamStore {
  std::vector<std::pair<std::string, ad::Mat>> params;

  ad::Mat& add(const std::string& name, int rows, int cols) {
    params.emplace_back(name, ad::Mat::Zero(rows, cols));
    return params.back().second;
  }
  ad::Mat& at(const std::string& name);
  const ad::Mat& at(const std::string& name) const;
  std::size_t scalar_count() const;
};

/// ReLU MLP with a linear output layer.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden{100, 100};
  int output_dim = 0;
};

/// Kaiming-style uniform fan-in init (U(+-sqrt(3/fan_in))), zero bias.
/// Layer l contributes `<prefix>.W<l>` and `<prefix>.b<l>`.
void init_mlp(ParamStore& ps, const std::string& prefix, const MlpSpec& spec,
              CounterRng rng);

/// All parameters of a store materialized as tape leaves.
struct TapeParams {
  std::map<std::string, int> ids;
  std::vector<int> ordered;  // same order as the ParamStore

  int at(const std::string& name) const {
    auto it = ids.find(name);
    require(it != ids.end(), "TapeParams: unknown parameter " + name);
    return it->second;
  }
};

TapeParams leaf_params(ad::Tape& t, const ParamStore& ps);

/// x is (input_dim x batch); returns (output_dim x batch).
int mlp_forward(ad::Tape& t, const MlpSpec& spec, const TapeParams& tp,
                const std::string& prefix, int x);

/// Plain (tape-free) forward for the fast sampling path.
ad::Mat mlp_forward_plain(const MlpSpec& spec, const ParamStore& ps,
                          const std::string& prefix, const ad::Mat& x);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Standard Adam with bias correction; moments aligned with the store order.
struct AdamState {
  AdamConfig cfg;
  std::int64_t step_count = 0;
  std::vector<ad::Mat> m, v;

  explicit AdamState(const AdamConfig& c = {}) : cfg(c) {}
  void init(const ParamStore& ps);
  void step(ParamStore& ps, const std::vector<ad::Mat>& grads);
};

/// Checkpoint container: meta JSON section, then one f64 block per parameter
/// (every section CRC-protected).
void save_param_stores(const std::string& path, const json& meta,
                       const std::vector<const ParamStore*>& stores);
json load_param_stores(const std::string& path, const std::vector<ParamStore*>& stores);

}  // namespace mimogan
