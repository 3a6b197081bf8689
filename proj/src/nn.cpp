// SPDX-License-Identifier: Apache-2.0
#include "mimogan/nn.hpp"

#include <cmath>
#include <cstring>

namespace mimogan {

namespace {
constexpr char kCheckpointMagic[8] = {'M', 'G', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

ad::Mat& ParamStore::at(const std::string& name) {
  for (auto& [n, m] : params)
    if (n == name) return m;
  throw config_error("ParamStore: unknown parameter " + name);
}

const ad::Mat& ParamStore::at(const std::string& name) const {
  for (const auto& [n, m] : params)
    if (n == name) return m;
  throw config_error("ParamStore: unknown parameter " + name);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : params) n += static_cast<std::size_t>(m.size());
  return n;
}

void init_mlp(ParamStore& ps, const std::string& prefix, const MlpSpec& spec,
              CounterRng rng) {
  require(spec.input_dim > 0 && spec.output_dim > 0, "MlpSpec: dims must be positive");
  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  for (int h : spec.hidden) dims.push_back(h);
  dims.push_back(spec.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = std::sqrt(3.0 / fan_in);
    ad::Mat& w = ps.add(prefix + ".W" + std::to_string(l), fan_out, fan_in);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    ps.add(prefix + ".b" + std::to_string(l), fan_out, 1);
  }
}

TapeParams leaf_params(ad::Tape& t, const ParamStore& ps) {
  TapeParams tp;
  for (const auto& [name, m] : ps.params) {
    const int id = t.leaf(m);
    tp.ids[name] = id;
    tp.ordered.push_back(id);
  }
  return tp;
}

int mlp_forward(ad::Tape& t, const MlpSpec& spec, const TapeParams& tp,
                const std::string& prefix, int x) {
  const int batch = static_cast<int>(t.value(x).cols());
  const std::size_t n_layers = spec.hidden.size() + 1;
  int h = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int w = tp.at(prefix + ".W" + std::to_string(l));
    const int b = tp.at(prefix + ".b" + std::to_string(l));
    h = t.add(t.matmul(w, h), t.broadcast_cols(b, batch));
    if (l + 1 < n_layers) h = t.relu(h);
  }
  return h;
}

ad::Mat mlp_forward_plain(const MlpSpec& spec, const ParamStore& ps,
                          const std::string& prefix, const ad::Mat& x) {
  const std::size_t n_layers = spec.hidden.size() + 1;
  ad::Mat h = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const ad::Mat& w = ps.at(prefix + ".W" + std::to_string(l));
    const ad::Mat& b = ps.at(prefix + ".b" + std::to_string(l));
    h = (w * h).colwise() + Eigen::VectorXd(b.col(0));
    if (l + 1 < n_layers) h = h.cwiseMax(0.0);
  }
  return h;
}

void AdamState::init(const ParamStore& ps) {
  step_count = 0;
  m.clear();
  v.clear();
  for (const auto& [name, p] : ps.params) {
    m.push_back(ad::Mat::Zero(p.rows(), p.cols()));
    v.push_back(ad::Mat::Zero(p.rows(), p.cols()));
  }
}

void AdamState::step(ParamStore& ps, const std::vector<ad::Mat>& grads) {
  require(grads.size() == ps.params.size(), "adam: gradient count mismatch");
  require(m.size() == ps.params.size(), "adam: state not initialized");
  ++step_count;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(step_count));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    ad::Mat& p = ps.params[i].second;
    require(grads[i].rows() == p.rows() && grads[i].cols() == p.cols(),
            "adam: gradient shape mismatch for " + ps.params[i].first);
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i].array().matrix() +
           (1.0 - cfg.beta2) * grads[i].cwiseProduct(grads[i]);
    const ad::Mat mhat = m[i] / bc1;
    const ad::Mat vhat = v[i] / bc2;
    p.array() -= cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
  }
}

void save_param_stores(const std::string& path, const json& meta,
                       const std::vector<const ParamStore*>& stores) {
  json full = meta;
  json blocks = json::array();
  for (std::size_t s = 0; s < stores.size(); ++s) {
    json names = json::array();
    for (const auto& [name, m] : stores[s]->params)
      names.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    blocks.push_back(names);
  }
  full["param_blocks"] = blocks;
  SectionWriter out(path, kCheckpointMagic, kVersion);
  out.write_json(full);
  for (const ParamStore* ps : stores)
    for (const auto& [name, m] : ps->params)
      out.write_section(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  out.close();
}

json load_param_stores(const std::string& path, const std::vector<ParamStore*>& stores) {
  SectionReader in(path, kCheckpointMagic, kVersion);
  const json meta = in.read_json();
  const json& blocks = meta["param_blocks"];
  require(blocks.size() == stores.size(), "checkpoint: store count mismatch");
  for (std::size_t s = 0; s < stores.size(); ++s) {
    ParamStore& ps = *stores[s];
    ps.params.clear();
    for (const json& b : blocks[s]) {
      ad::Mat& m = ps.add(b["name"].get<std::string>(), b["rows"].get<int>(),
                          b["cols"].get<int>());
      const std::vector<char> raw = in.read_section();
      if (raw.size() != static_cast<std::size_t>(m.size()) * sizeof(double))
        throw io_error(io_error::kind::truncated,
                       "parameter block size mismatch: " + b["name"].get<std::string>());
      std::memcpy(m.data(), raw.data(), raw.size());
    }
  }
  return meta;
}

}  // namespace mimogan
