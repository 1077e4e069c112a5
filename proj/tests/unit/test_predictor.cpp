#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "procat/error.hpp"
#include "procat/predictor.hpp"

using namespace procat;

namespace {

// Two gaussian blobs separated along x0 + x1.
Dataset blobs(std::size_t n, std::uint64_t seed, std::size_t cols = 2, double gap = 3.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  Dataset d;
  d.cols = cols;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    for (std::size_t c = 0; c < cols; ++c) d.values.push_back(g(rng) + (c < 2 ? (y ? gap : -gap) / 2 : 0.0));
    d.targets.push_back(y);
    ++d.rows;
  }
  return d;
}

MlpConfig softmax_regression(std::size_t width, std::size_t classes = 2) {
  MlpConfig c;
  c.branches = {{{InputSlice::Source::Range, 0, width}, {}}};
  c.classes = classes;
  return c;
}

double accuracy(const MlpModel& m, const Dataset& d) {
  const auto p = predict_proba(m, d);
  std::size_t hit = 0;
  for (std::size_t r = 0; r < d.rows; ++r) {
    const auto* row = p.data() + r * m.classes();
    const auto best = std::max_element(row, row + m.classes()) - row;
    hit += best == d.targets[r];
  }
  return static_cast<double>(hit) / static_cast<double>(d.rows);
}

}  // namespace

TEST_CASE("train examples") {
  const auto data = blobs(100, 1);
  auto cfg = softmax_regression(2);
  cfg.trunk = {{8, 0.0}};
  cfg.learning_rate = 0.01;
  cfg.epochs = 100;
  const auto model = train(data, cfg);
  CHECK(accuracy(model, data) == 1.0);
  CHECK(model.train_loss_history.size() == 100);

  cfg.epochs = 0;
  cfg.classes = 3;
  Dataset three = data;
  for (std::size_t i = 0; i < three.rows; i += 3) three.targets[i] = 2;
  const auto init = train(three, cfg, three);
  CHECK(init.best_epoch == 0);
  CHECK(init.parameters() == MlpModel(cfg.resolved(2, 0), 2).parameters());
  CHECK(mean_loss(init, three) == doctest::Approx(std::log(3.0)).epsilon(0.15));

  cfg.epochs = 20;
  cfg.classes = 2;
  cfg.trunk = {{8, 0.3}};
  const auto a = train(data, cfg, blobs(40, 2));
  const auto b = train(data, cfg, blobs(40, 2));
  CHECK(a.parameters() == b.parameters());
  CHECK(a.train_loss_history == b.train_loss_history);
  CHECK(a.validation_loss_history == b.validation_loss_history);
}

TEST_CASE("train errors") {
  const auto data = blobs(20, 3);
  auto cfg = softmax_regression(3);
  try {
    train(data, cfg);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
  }
  cfg = softmax_regression(2);
  cfg.learning_rate = 1e6;
  cfg.optimizer = Optimizer::Sgd;
  cfg.standardize = false;
  cfg.trunk = {{16, 0.0}, {16, 0.0}};
  Dataset huge = data;
  for (auto& v : huge.values) v *= 1e150;
  try {
    train(huge, cfg);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFiniteLoss);
    REQUIRE(e.index().has_value());
    CHECK(*e.index() >= 1);
  }
  Dataset bad_label = data;
  bad_label.targets[0] = 5;
  CHECK_THROWS_AS(train(bad_label, softmax_regression(2)), Error);
}

TEST_CASE("predict_proba examples") {
  auto data = blobs(30, 4);
  auto cfg = softmax_regression(2, 3);
  cfg.trunk = {{5, 0.5}};
  const MlpModel model(cfg.resolved(2, 0), 2);
  const auto p = predict_proba(model, data);
  for (std::size_t r = 0; r < data.rows; ++r) {
    CHECK(p[3 * r] + p[3 * r + 1] + p[3 * r + 2] == doctest::Approx(1.0).epsilon(1e-6));
  }
  Dataset dup;
  dup.cols = 2;
  dup.rows = 2;
  dup.values = {0.3, -1.0, 0.3, -1.0};
  dup.targets = {0, 1};
  const auto q = predict_proba(model, dup);
  CHECK(std::equal(q.begin(), q.begin() + 3, q.begin() + 3));

  MlpModel flat = model;
  std::fill(flat.parameters().begin(), flat.parameters().end(), 0.0);
  for (double v : predict_proba(flat, data)) CHECK(v == doctest::Approx(1.0 / 3));

  Dataset wide = blobs(4, 5, 3);
  CHECK_THROWS_AS(predict_proba(model, wide), Error);
}

TEST_CASE("gradient check examples") {
  const auto data = blobs(12, 6, 4);
  auto reg = softmax_regression(4, 3);
  Dataset d3 = data;
  for (std::size_t i = 0; i < d3.rows; ++i) d3.targets[i] = static_cast<int>(i % 3);
  const auto r1 = gradient_check(reg.resolved(4, 0), d3);
  CHECK(r1.max_relative_error < 1e-6);
  CHECK(r1.parameters == 4 * 3 + 3);

  MlpConfig two;
  two.branches = {{{InputSlice::Source::Range, 0, 2}, {{6, 0.0}}}, {{InputSlice::Source::Range, 2, 4}, {{3, 0.0}}}};
  two.trunk = {{5, 0.0}};
  two.classes = 3;
  two.seed = 9;
  const auto r2 = gradient_check(two, d3);
  // central differences straddle a kink only when a pre-activation is within one step
  CHECK(r2.min_abs_preactivation > 1e-5);
  CHECK(r2.max_relative_error < 1e-4);

  two.branches[0].layers[0].dropout = 0.5;
  two.trunk[0].dropout = 0.5;
  GradientCheckOptions control;
  control.dropout_enabled = true;
  const auto r3 = gradient_check(two, d3, control);
  CHECK(r3.max_relative_error > 1e-2);
}

TEST_CASE("property: full-batch SGD descent is monotone") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = blobs(40, seed, 3, 1.0);
    auto cfg = softmax_regression(3);
    cfg.trunk = {{6, 0.0}};
    cfg.optimizer = Optimizer::Sgd;
    cfg.learning_rate = 0.02;
    cfg.batch_size = data.rows;
    cfg.epochs = 60;
    cfg.seed = seed;
    const auto m = train(data, cfg);
    for (std::size_t e = 1; e < m.train_loss_history.size(); ++e) {
      CHECK(m.train_loss_history[e] <= m.train_loss_history[e - 1] + 1e-12);
    }
  }
}

TEST_CASE("property: softmax invariant under a constant logit shift") {
  auto data = blobs(20, 7);
  auto cfg = softmax_regression(2, 4);
  cfg.trunk = {{5, 0.0}};
  for (std::size_t i = 0; i < data.rows; ++i) data.targets[i] = static_cast<int>(i % 4);
  MlpModel m(cfg.resolved(2, 0), 2);
  m.set_standardization({0, 0}, {1, 1});
  const auto before = predict_proba(m, data);
  auto& p = m.parameters();
  for (std::size_t k = p.size() - 4; k < p.size(); ++k) p[k] += 17.5;
  const auto after = predict_proba(m, data);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-12));
}

TEST_CASE("property: row order is irrelevant for full-batch training") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    const auto data = blobs(30, 10 + static_cast<std::uint64_t>(rep), 3, 1.0);
    auto cfg = softmax_regression(3);
    cfg.trunk = {{4, 0.0}};
    cfg.batch_size = data.rows;
    cfg.epochs = 15;
    std::vector<std::size_t> perm(data.rows);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Dataset shuffled;
    shuffled.cols = data.cols;
    shuffled.rows = data.rows;
    for (auto r : perm) {
      shuffled.values.insert(shuffled.values.end(), data.row(r), data.row(r) + data.cols);
      shuffled.targets.push_back(data.targets[r]);
    }
    const auto a = train(data, cfg).parameters();
    const auto b = train(shuffled, cfg).parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }
}

TEST_CASE("config resolution and JSON") {
  const auto j = nlohmann::json::parse(R"({
    "branches": [{"input": "tss", "layers": [200]}, {"input": "aux", "layers": [{"units": 20}]}],
    "trunk": [{"units": 90, "dropout": 0.2}],
    "optimizer": "rmsprop", "learning_rate": 0.001, "epochs": 5, "batch_size": 16,
    "assumed": ["learning_rate"]
  })");
  const auto cfg = mlp_config_from_json(j);
  CHECK(cfg.optimizer == Optimizer::RmsProp);
  CHECK(cfg.assumed == std::vector<std::string>{"learning_rate"});
  const auto r = cfg.resolved(12, 4);
  REQUIRE(r.branches.size() == 2);
  CHECK(r.branches[0].slice.begin == 0);
  CHECK(r.branches[0].slice.end == 12);
  CHECK(r.branches[1].slice.begin == 12);
  CHECK(r.branches[1].slice.end == 16);
  CHECK(cfg.resolved(12, 0).branches.size() == 1);
  CHECK(mlp_config_from_json(to_json(cfg)).trunk[0].dropout == 0.2);

  auto gap = softmax_regression(3);
  gap.branches[0].slice.end = 2;
  CHECK_THROWS_AS(gap.validate(3), Error);
  CHECK_THROWS_AS(mlp_config_from_json(nlohmann::json{{"optimizer", "lbfgs"}}), Error);
}

TEST_CASE("model JSON round-trip") {
  const auto data = blobs(40, 11, 4);
  MlpConfig cfg;
  cfg.branches = {{{InputSlice::Source::Range, 0, 3}, {{6, 0.1}}}, {{InputSlice::Source::Range, 3, 4}, {}}};
  cfg.trunk = {{4, 0.0}};
  cfg.epochs = 5;
  const auto m = train(data, cfg, blobs(10, 12, 4));
  const auto back = mlp_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.parameters() == m.parameters());
  CHECK(predict_proba(back, data) == predict_proba(m, data));
  CHECK(back.best_epoch == m.best_epoch);
  CHECK(back.validation_loss_history == m.validation_loss_history);
}

TEST_CASE("shipped presets load, resolve and train") {
  const std::map<std::string, std::vector<std::size_t>> first_layers = {
      {"cad", {200, 20}}, {"hf", {64, 64}}, {"diabetes", {64, 16}}, {"covid", {90, 5}}, {"pi", {76, 5}}};
  for (const auto& [name, units] : first_layers) {
    INFO(name);
    std::ifstream in(std::string(PROCAT_SOURCE_DIR) + "/presets/" + name + ".json");
    REQUIRE(in);
    auto cfg = mlp_config_from_json(nlohmann::json::parse(in));
    REQUIRE(cfg.branches.size() == 2);
    CHECK(cfg.branches[0].layers.front().units == units[0]);
    CHECK(cfg.branches[1].layers.front().units == units[1]);
    CHECK(!cfg.assumed.empty());
    cfg.epochs = 1;
    const auto data = blobs(24, 13, 9);
    const auto m = train(data, cfg.resolved(6, 3));
    CHECK(m.input_width() == 9);
  }
}
