#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogdbench/model.hpp"
#include "ogdbench/optimizers.hpp"
#include "ogdbench/tasks.hpp"

namespace ogdbench {

enum class Method { kOgd, kSgd, kEwc, kAgem, kMtl };

const char* to_string(Method m);
Method method_from_string(const std::string& name);

struct TrainConfig {
  Method method = Method::kOgd;
  int epochs_per_task = 5;
  int batch_size = 10;
  double lr = 1e-3;
  std::vector<int> hidden_dims = {100, 100};
  OgdConfig ogd;
  double ewc_lambda = 100.0;
  int ewc_fisher_samples = 600;
  int agem_capacity_per_task = 200;
  int agem_ref_batch_size = 0;  // 0 = whole memory
  int eval_every = 0;           // 0 = no mid-training evaluation

  void validate() const;
};

struct TrajectoryPoint {
  long step;
  int task_id;
  double accuracy;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<double> final_accuracy;  // one entry per task
  std::vector<TrajectoryPoint> trajectory;
};

struct SummaryTable {
  int num_seeds = 0;
  std::vector<double> mean_pct;  // per task
  std::vector<double> std_pct;   // per task; NaN when num_seeds < 2
};

// The model family used for a suite: shared trunk, one head per task for
// split suites, a single 10-logit head otherwise.
ModelConfig model_config_for_suite(const std::vector<TaskDataset>& suite,
                                   const std::vector<int>& hidden_dims);

// Fraction of test examples whose argmax head-local logit equals the mapped
// label. Ties break toward the lowest logit index.
double evaluate(const Mlp& model, const Vec& params, const TaskDataset& task);

// Trains through the suite in order with the configured method and returns
// the per-task final test accuracies. Fully deterministic in
// (suite, config, seed).
RunResult train_sequence(const std::vector<TaskDataset>& suite, const TrainConfig& config,
                         std::uint64_t seed);

// train_sequence for each seed, optionally in parallel worker threads.
// Results are ordered like `seeds` regardless of scheduling.
std::vector<RunResult> run_seeds(const std::vector<TaskDataset>& suite,
                                 const TrainConfig& config,
                                 const std::vector<std::uint64_t>& seeds, int jobs = 1);

SummaryTable aggregate(const std::vector<RunResult>& results);

}  // namespace ogdbench
