// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "mimogan/nn.hpp"

using namespace mimogan;
using ad::Mat;

namespace {
std::string tmp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("mlp init respects fan-in bounds and is deterministic") {
  MlpSpec spec{8, {5}, 3};
  ParamStore p1, p2;
  init_mlp(p1, "m", spec, CounterRng(4));
  init_mlp(p2, "m", spec, CounterRng(4));
  REQUIRE(p1.params.size() == 4);
  CHECK(p1.at("m.W0").rows() == 5);
  CHECK(p1.at("m.W0").cols() == 8);
  CHECK(p1.at("m.W1").rows() == 3);
  CHECK(p1.at("m.b0").cwiseAbs().maxCoeff() == 0.0);
  CHECK(p1.at("m.W0").cwiseAbs().maxCoeff() <= std::sqrt(3.0 / 8.0));
  CHECK(p1.at("m.W1").cwiseAbs().maxCoeff() <= std::sqrt(3.0 / 5.0));
  CHECK((p1.at("m.W0") - p2.at("m.W0")).cwiseAbs().maxCoeff() == 0.0);

  ParamStore p3;
  init_mlp(p3, "m", spec, CounterRng(5));
  CHECK((p1.at("m.W0") - p3.at("m.W0")).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("mlp forward matches the hand-written formula") {
  MlpSpec spec{2, {3}, 1};
  ParamStore ps;
  init_mlp(ps, "m", spec, CounterRng(6));
  ps.at("m.b0") << 0.1, -0.2, 0.3;
  ps.at("m.b1") << 0.5;

  Mat x(2, 4);
  x << 1.0, -2.0, 0.5, 0.0, -1.0, 0.3, 2.0, -0.7;

  const Mat want_h =
      ((ps.at("m.W0") * x).colwise() + Eigen::VectorXd(ps.at("m.b0").col(0)))
          .cwiseMax(0.0);
  const Mat want =
      (ps.at("m.W1") * want_h).colwise() + Eigen::VectorXd(ps.at("m.b1").col(0));

  CHECK((mlp_forward_plain(spec, ps, "m", x) - want).cwiseAbs().maxCoeff() < 1e-14);

  ad::Tape t;
  const TapeParams tp = leaf_params(t, ps);
  const int out = mlp_forward(t, spec, tp, "m", t.constant(x));
  CHECK((t.value(out) - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("adam first step has the closed form") {
  ParamStore ps;
  ps.add("p", 2, 2) << 1.0, -2.0, 3.0, 0.5;
  const Mat before = ps.at("p");
  Mat g(2, 2);
  g << 0.2, -0.4, 1.5, 0.0;

  AdamConfig cfg;
  AdamState adam(cfg);
  adam.init(ps);
  adam.step(ps, {g});

  // With bias correction, mhat = g and vhat = g^2 after one step.
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double want =
          before(i, j) - cfg.lr * g(i, j) / (std::abs(g(i, j)) + cfg.eps);
      CHECK(ps.at("p")(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("adam state validates gradient shapes") {
  ParamStore ps;
  ps.add("p", 2, 2);
  AdamState adam;
  adam.init(ps);
  CHECK_THROWS_AS(adam.step(ps, {Mat::Zero(3, 2)}), config_error);
  CHECK_THROWS_AS(adam.step(ps, {}), config_error);
}

TEST_CASE("checkpoint round trip is exact") {
  MlpSpec spec{4, {6}, 2};
  ParamStore a, b;
  init_mlp(a, "x", spec, CounterRng(7));
  init_mlp(b, "y", spec, CounterRng(8));

  const std::string path = tmp_file("mg_test_ckpt.bin");
  save_param_stores(path, {{"note", "roundtrip"}}, {&a, &b});

  ParamStore a2, b2;
  const json meta = load_param_stores(path, {&a2, &b2});
  CHECK(meta["note"] == "roundtrip");
  REQUIRE(a2.params.size() == a.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    CHECK(a2.params[i].first == a.params[i].first);
    CHECK((a2.params[i].second - a.params[i].second).cwiseAbs().maxCoeff() == 0.0);
  }
  ParamStore only;
  CHECK_THROWS_AS(load_param_stores(path, {&only}), config_error);
  std::filesystem::remove(path);
}

TEST_CASE("tape params preserve store order") {
  ParamStore ps;
  ps.add("z", 1, 1);
  ps.add("a", 2, 1);
  ad::Tape t;
  const TapeParams tp = leaf_params(t, ps);
  REQUIRE(tp.ordered.size() == 2);
  CHECK(tp.at("z") == tp.ordered[0]);
  CHECK(tp.at("a") == tp.ordered[1]);
  CHECK_THROWS_AS(tp.at("missing"), config_error);
}
