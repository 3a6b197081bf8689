// SPDX-License-Identifier: Apache-2.0
#include "mimogan/channel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mimogan {

std::vector<double> TdlProfile::powers_linear() const {
  std::vector<double> p(powers_db.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::pow(10.0, powers_db[i] / 10.0);
    sum += p[i];
  }
  require(sum > 0.0, "TdlProfile: total power is zero");
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> TdlProfile::delays_s() const {
  std::vector<double> d(delays_norm.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = delays_norm[i] * delay_spread_ns * 1e-9;
  return d;
}

void TdlProfile::validate() const {
  require(!delays_norm.empty(), "TdlProfile: empty");
  require(delays_norm.size() == powers_db.size(), "TdlProfile: delay/power length mismatch");
  require(delays_norm.front() == 0.0, "TdlProfile: first delay must be 0");
  require(delay_spread_ns > 0.0, "TdlProfile: delay spread must be positive");
  for (std::size_t i = 1; i < delays_norm.size(); ++i)
    require(delays_norm[i] >= delays_norm[i - 1], "TdlProfile: delays not ascending");
}

TdlProfile TdlProfile::load_csv(const std::string& path, const std::string& name,
                                double delay_spread_ns) {
  std::ifstream f(path);
  if (!f) throw io_error(io_error::kind::open, "cannot open profile CSV: " + path);
  TdlProfile p;
  p.name = name;
  p.delay_spread_ns = delay_spread_ns;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // header row: delay_normalized,power_db
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw io_error(io_error::kind::other, "malformed profile row in " + path + ": " + line);
    p.delays_norm.push_back(std::stod(a));
    p.powers_db.push_back(std::stod(b));
  }
  p.validate();
  return p;
}

TdlProfile TdlProfile::single_tap() {
  TdlProfile p;
  p.name = "single-tap";
  p.delays_norm = {0.0};
  p.powers_db = {0.0};
  return p;
}

void CorrelationConfig::validate() const {
  for (const Eigen::MatrixXcd* r : {&r_tx, &r_rx}) {
    require(r->rows() == r->cols(), "CorrelationConfig: matrix not square");
    require((*r - r->adjoint()).cwiseAbs().maxCoeff() < 1e-12,
            "CorrelationConfig: matrix not Hermitian");
    for (int i = 0; i < r->rows(); ++i)
      require(std::abs((*r)(i, i) - cd{1.0, 0.0}) < 1e-12,
              "CorrelationConfig: diagonal must be 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(*r, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-12, "CorrelationConfig: matrix not PSD");
  }
}

CorrelationConfig CorrelationConfig::identity(int n_tx, int n_rx) {
  return {Eigen::MatrixXcd::Identity(n_tx, n_tx), Eigen::MatrixXcd::Identity(n_rx, n_rx)};
}

Eigen::MatrixXcd CorrelationConfig::exponential(int n, double a) {
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) {
        const double e = std::pow(double(i - j) / double(n - 1), 2.0);
        r(i, j) = std::pow(a, e);
      }
  return r;
}

Eigen::MatrixXcd CorrelationConfig::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error(io_error::kind::open, "cannot open correlation CSV: " + path);
  std::vector<std::vector<cd>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> vals;
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() % 2 != 0)
      throw io_error(io_error::kind::other, "odd value count in correlation row: " + path);
    std::vector<cd> row;
    for (std::size_t i = 0; i < vals.size(); i += 2) row.emplace_back(vals[i], vals[i + 1]);
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw io_error(io_error::kind::other, "correlation matrix not square: " + path);
    for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void CorrelationConfig::save_csv(const Eigen::MatrixXcd& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw io_error(io_error::kind::open, "cannot write correlation CSV: " + path);
  f.precision(17);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) f << ',';
      f << m(i, j).real() << ',' << m(i, j).imag();
    }
    f << '\n';
  }
}

void ChannelRealizationConfig::validate() const {
  require(n_tx >= 1 && n_rx >= 1, "config: antenna counts must be positive");
  require(n_taps >= 1, "config: n_taps must be positive");
  require(sample_rate_hz > 0.0, "config: sample rate must be positive");
  if (fixed_gain) return;
  profile.validate();
  require(correlation.r_tx.rows() == n_tx, "config: r_tx size != n_tx");
  require(correlation.r_rx.rows() == n_rx, "config: r_rx size != n_rx");
  correlation.validate();
  const double last = profile.delays_s().back();
  require(double(n_taps) / sample_rate_hz >= last,
          "config: n_taps/sample_rate does not cover the last path delay");
}

Eigen::MatrixXcd correlation_sqrt(const Eigen::MatrixXcd& r) {
  require(r.rows() == r.cols(), "correlation_sqrt: matrix not square");
  require((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-10, "correlation_sqrt: not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
  Eigen::VectorXd ev = es.eigenvalues();
  require(ev.minCoeff() >= -1e-8, "correlation_sqrt: matrix not PSD");
  for (int i = 0; i < ev.size(); ++i) ev[i] = std::sqrt(std::max(ev[i], 0.0));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double interp_kernel(double t) {
  constexpr double kHalf = 16.0;
  if (std::abs(t) > kHalf + 0.5) return 0.0;
  const double w = 0.5 * (1.0 + std::cos(M_PI * t / (kHalf + 0.5)));
  const double x = M_PI * t;
  const double sinc = std::abs(t) < 1e-12 ? 1.0 : std::sin(x) / x;
  return sinc * w;
}

ChannelTensor sample_channel(const ChannelRealizationConfig& cfg,
                             std::uint64_t realization_index) {
  cfg.validate();
  ChannelTensor h(cfg.n_rx, cfg.n_tx, cfg.n_taps, cfg.sample_rate_hz);

  if (cfg.fixed_gain) {
    for (int i = 0; i < cfg.n_rx; ++i)
      for (int j = 0; j < cfg.n_tx; ++j) h.at(i, j, 0) = *cfg.fixed_gain;
    return h;
  }

  const Eigen::MatrixXcd s_tx = correlation_sqrt(cfg.correlation.r_tx);
  const Eigen::MatrixXcd s_rx = correlation_sqrt(cfg.correlation.r_rx);
  const std::vector<double> powers = cfg.profile.powers_linear();
  const std::vector<double> delays = cfg.profile.delays_s();
  const CounterRng base = CounterRng(cfg.rng_seed).derive(realization_index);

  constexpr int kHalf = 16;
  for (int p = 0; p < cfg.profile.n_paths(); ++p) {
    CounterRng rng = base.derive(static_cast<std::uint64_t>(p));
    Eigen::MatrixXcd w(cfg.n_rx, cfg.n_tx);
    for (int i = 0; i < cfg.n_rx; ++i)
      for (int j = 0; j < cfg.n_tx; ++j) w(i, j) = rng.cnormal();
    // Per-path Kronecker coloring: G = S_rx W S_tx^H gives
    // E[G^H G] = N_R R_tx and E[G G^H] = N_T R_rx.
    const Eigen::MatrixXcd g = std::sqrt(powers[p]) * (s_rx * w * s_tx.adjoint());

    // Band-limited placement at the (fractional) delay, truncated at grid edges.
    const double d = delays[p] * cfg.sample_rate_hz;
    const int lo = std::max(0, static_cast<int>(std::ceil(d - kHalf)));
    const int hi = std::min(cfg.n_taps - 1, static_cast<int>(std::floor(d + kHalf)));
    for (int n = lo; n <= hi; ++n) {
      const double k = interp_kernel(double(n) - d);
      if (k == 0.0) continue;
      for (int i = 0; i < cfg.n_rx; ++i)
        for (int j = 0; j < cfg.n_tx; ++j) h.at(i, j, n) += k * g(i, j);
    }
  }
  return h;
}

Waveform apply_channel(const ChannelTensor& h, const Waveform& x) {
  return convolve(h, x);
}

}  // namespace mimogan
