#include "ogdbench/harness.hpp"

#include <doctest.h>

#include <cmath>

#include "ogdbench/errors.hpp"
#include "ogdbench/rng.hpp"
#include "oracles.hpp"

using namespace ogdbench;

namespace {

// Learnable synthetic base: class k concentrates mass on pixel block k.
MnistData learnable_base(int side, int n_train, int n_test, std::uint64_t seed) {
  MnistData data;
  Rng rng(seed);
  const int pixels = side * side;
  auto fill = [&rng, pixels](Dataset& ds, int n) {
    ds.images.resize(n, pixels);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
      const int label = i % 10;
      for (int j = 0; j < pixels; ++j) ds.images(i, j) = 0.05 * rng.uniform(0, 1);
      // signal: a label-dependent stripe
      for (int j = label; j < pixels; j += 10) ds.images(i, j) += 0.8;
      ds.labels[i] = label;
    }
  };
  fill(data.train, n_train);
  fill(data.test, n_test);
  return data;
}

TrainConfig small_config(Method method) {
  TrainConfig cfg;
  cfg.method = method;
  cfg.epochs_per_task = 2;
  cfg.batch_size = 8;
  cfg.lr = 1e-2;
  cfg.hidden_dims = {16};
  cfg.ogd.budget_per_task = 20;
  cfg.ewc_fisher_samples = 10;
  cfg.agem_capacity_per_task = 20;
  return cfg;
}

}  // namespace

TEST_CASE("evaluate: constant predictor, perfect predictor, random init") {
  // 2-class split-style task, input = one-hot of the label
  TaskDataset task;
  task.task_id = 0;
  task.head = 0;
  task.label_map = {{0, 0}, {1, 1}};
  const int n = 40;
  task.test.images = RowMat::Zero(n, 2);
  task.test.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    task.test.labels[i] = i % 2;
    task.test.images(i, i % 2) = 1.0;
  }
  task.train = task.test;

  ModelConfig mc;
  mc.input_dim = 2;
  mc.hidden_dims = {};
  mc.logits_per_head = 2;
  Mlp mlp(mc);

  SUBCASE("constant predictor on balanced classes: 0.5") {
    Vec params = Vec::Zero(mlp.param_count());
    params[mlp.head_bias_offset(0)] = 5.0;  // always logit 0
    CHECK(evaluate(mlp, params, task) == doctest::Approx(0.5));
  }
  SUBCASE("identity weights: accuracy 1.0") {
    Vec params = Vec::Zero(mlp.param_count());
    // W = I: logit j = x_j
    params[mlp.head_weight_offset(0) + 0 * 2 + 0] = 1.0;
    params[mlp.head_weight_offset(0) + 1 * 2 + 1] = 1.0;
    CHECK(evaluate(mlp, params, task) == 1.0);
  }
  SUBCASE("all-zero params tie-break toward lowest index: 0.5 on balanced labels") {
    Vec params = Vec::Zero(mlp.param_count());
    CHECK(evaluate(mlp, params, task) == doctest::Approx(0.5));
  }
}

TEST_CASE("evaluate: random 10-class init lands near chance") {
  MnistData base = learnable_base(6, 10, 1000, 5);
  auto suite = make_permuted_suite(base, 1, 3);
  ModelConfig mc = model_config_for_suite(suite, {12});
  Mlp mlp(mc);
  double mean = 0;
  for (int init = 0; init < 5; ++init) {
    mean += evaluate(mlp, mlp.init_params(1000 + init), suite[0]);
  }
  mean /= 5;
  CHECK(mean > 0.05);
  CHECK(mean < 0.15);
}

TEST_CASE("aggregate: hand-computed mean/std and degenerate cases") {
  RunResult a, b;
  a.seed = 1;
  a.final_accuracy = {0.8};
  b.seed = 2;
  b.final_accuracy = {0.9};
  SummaryTable two = aggregate({a, b});
  CHECK(two.mean_pct[0] == doctest::Approx(85.0).epsilon(1e-12));
  CHECK(two.std_pct[0] == doctest::Approx(100.0 * oracles::sample_std({0.8, 0.9})).epsilon(1e-12));
  CHECK(two.std_pct[0] == doctest::Approx(7.0710678).epsilon(1e-6));

  SummaryTable one = aggregate({a});
  CHECK(one.mean_pct[0] == doctest::Approx(80.0));
  CHECK(std::isnan(one.std_pct[0]));

  SummaryTable same = aggregate({a, a});
  CHECK(same.std_pct[0] == 0.0);

  CHECK(aggregate({}).num_seeds == 0);
}

TEST_CASE("model_config_for_suite: head layout per suite kind") {
  MnistData base = learnable_base(4, 40, 20, 7);
  auto permuted = make_permuted_suite(base, 3, 11);
  ModelConfig pc = model_config_for_suite(permuted, {16, 16});
  CHECK(pc.num_heads == 1);
  CHECK(pc.logits_per_head == 10);
  CHECK(pc.input_dim == 16);

  auto split = make_split_suite(base, {{0, 1}, {2, 3}});
  ModelConfig sc = model_config_for_suite(split, {16});
  CHECK(sc.num_heads == 2);
  CHECK(sc.logits_per_head == 2);

  auto uneven = make_split_suite(base, {{0, 1, 2}, {3, 4}});
  CHECK_THROWS_AS(model_config_for_suite(uneven, {16}), InvalidSpec);
}

TEST_CASE("train_sequence: 1-task suite gives identical results for every method") {
  MnistData base = learnable_base(4, 60, 30, 13);
  auto suite = make_permuted_suite(base, 1, 17);
  std::vector<RunResult> results;
  for (Method m : {Method::kSgd, Method::kOgd, Method::kEwc, Method::kAgem, Method::kMtl}) {
    results.push_back(train_sequence(suite, small_config(m), 99));
  }
  for (std::size_t i = 1; i < results.size(); ++i) {
    CHECK(results[i].final_accuracy == results[0].final_accuracy);
  }
}

TEST_CASE("train_sequence: OGD with zero budget matches SGD across task boundaries") {
  MnistData base = learnable_base(4, 60, 30, 19);
  auto suite = make_permuted_suite(base, 3, 23);
  TrainConfig ogd_cfg = small_config(Method::kOgd);
  ogd_cfg.ogd.budget_per_task = 0;
  RunResult ogd = train_sequence(suite, ogd_cfg, 5);
  RunResult sgd = train_sequence(suite, small_config(Method::kSgd), 5);
  CHECK(ogd.final_accuracy == sgd.final_accuracy);
}

TEST_CASE("train_sequence: deterministic in (suite, config, seed)") {
  MnistData base = learnable_base(4, 50, 25, 29);
  auto suite = make_split_suite(base, {{0, 1}, {2, 3}});
  TrainConfig cfg = small_config(Method::kOgd);
  cfg.eval_every = 7;
  RunResult a = train_sequence(suite, cfg, 31);
  RunResult b = train_sequence(suite, cfg, 31);
  CHECK(a.final_accuracy == b.final_accuracy);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(a.trajectory[i].accuracy == b.trajectory[i].accuracy);
    CHECK(a.trajectory[i].step == b.trajectory[i].step);
  }
  RunResult c = train_sequence(suite, cfg, 32);
  CHECK(a.final_accuracy != c.final_accuracy);
}

TEST_CASE("train_sequence: trajectory cadence honors eval_every") {
  MnistData base = learnable_base(4, 40, 20, 37);
  auto suite = make_permuted_suite(base, 2, 41);
  TrainConfig cfg = small_config(Method::kSgd);
  cfg.eval_every = 5;
  RunResult r = train_sequence(suite, cfg, 7);
  // 2 tasks x 2 epochs x ceil(40/8)=5 batches -> 20 steps -> 4 eval points,
  // each covering every task
  const long steps = 2L * 2 * 5;
  const std::size_t expected_points = static_cast<std::size_t>(steps / 5) * suite.size();
  CHECK(r.trajectory.size() == expected_points);
  for (const auto& pt : r.trajectory) CHECK(pt.step % 5 == 0);

  cfg.eval_every = 0;
  CHECK(train_sequence(suite, cfg, 7).trajectory.empty());
}

TEST_CASE("train_sequence: every method learns a learnable 2-task split") {
  MnistData base = learnable_base(6, 400, 100, 43);
  auto suite = make_split_suite(base, {{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}});
  for (Method m : {Method::kSgd, Method::kOgd, Method::kEwc, Method::kAgem, Method::kMtl}) {
    TrainConfig cfg = small_config(m);
    cfg.epochs_per_task = 3;
    RunResult r = train_sequence(suite, cfg, 11);
    // final task is always freshly trained: must beat chance clearly
    CHECK(r.final_accuracy.back() > 0.6);
  }
}

TEST_CASE("run_seeds: parallel execution matches sequential results") {
  MnistData base = learnable_base(4, 40, 20, 47);
  auto suite = make_permuted_suite(base, 2, 53);
  TrainConfig cfg = small_config(Method::kOgd);
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
  auto seq = run_seeds(suite, cfg, seeds, 1);
  auto par = run_seeds(suite, cfg, seeds, 3);
  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].seed == par[i].seed);
    CHECK(seq[i].final_accuracy == par[i].final_accuracy);
  }
}

TEST_CASE("train_sequence rejects structurally bad input") {
  MnistData base = learnable_base(4, 40, 20, 59);
  auto suite = make_permuted_suite(base, 1, 61);
  TrainConfig cfg = small_config(Method::kSgd);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train_sequence(suite, cfg, 1), InvalidSpec);
  cfg = small_config(Method::kSgd);
  cfg.lr = 0.0;
  CHECK_THROWS_AS(train_sequence(suite, cfg, 1), InvalidSpec);
  CHECK_THROWS_AS(train_sequence({}, small_config(Method::kSgd), 1), InvalidSpec);
}
