#include "ogdbench/harness.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "ogdbench/errors.hpp"
#include "ogdbench/rng.hpp"

namespace ogdbench {

const char* to_string(Method m) {
  switch (m) {
    case Method::kOgd: return "OGD";
    case Method::kSgd: return "SGD";
    case Method::kEwc: return "EWC";
    case Method::kAgem: return "AGEM";
    case Method::kMtl: return "MTL";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "OGD") return Method::kOgd;
  if (name == "SGD") return Method::kSgd;
  if (name == "EWC") return Method::kEwc;
  if (name == "AGEM" || name == "A-GEM") return Method::kAgem;
  if (name == "MTL") return Method::kMtl;
  throw InvalidSpec("unknown method: " + name);
}

void TrainConfig::validate() const {
  if (epochs_per_task < 1) throw InvalidSpec("epochs_per_task must be >= 1");
  if (batch_size < 1) throw InvalidSpec("batch_size must be >= 1");
  if (!(lr > 0)) throw InvalidSpec("lr must be > 0");
  if (ogd.budget_per_task < 0) throw InvalidSpec("ogd.budget_per_task must be >= 0");
  if (ewc_fisher_samples < 1) throw InvalidSpec("ewc_fisher_samples must be >= 1");
  if (agem_capacity_per_task < 0) throw InvalidSpec("agem.capacity_per_task must be >= 0");
  if (agem_ref_batch_size < 0) throw InvalidSpec("agem.ref_batch_size must be >= 0");
  if (eval_every < 0) throw InvalidSpec("eval_every must be >= 0");
  for (int h : hidden_dims) {
    if (h < 1) throw InvalidSpec("hidden_dims entries must be >= 1");
  }
}

ModelConfig model_config_for_suite(const std::vector<TaskDataset>& suite,
                                   const std::vector<int>& hidden_dims) {
  if (suite.empty()) throw InvalidSpec("empty task suite");
  ModelConfig cfg;
  cfg.input_dim = static_cast<int>(suite[0].train.images.cols());
  cfg.hidden_dims = hidden_dims;
  const bool multi_head = suite[0].transform.kind == TransformDesc::Kind::kSplit;
  if (multi_head) {
    cfg.num_heads = static_cast<int>(suite.size());
    cfg.logits_per_head = static_cast<int>(suite[0].label_map.size());
    for (const auto& task : suite) {
      if (static_cast<int>(task.label_map.size()) != cfg.logits_per_head) {
        throw InvalidSpec("split suite: all partitions must have the same size");
      }
    }
  } else {
    cfg.num_heads = 1;
    cfg.logits_per_head = 10;
  }
  for (const auto& task : suite) {
    if (task.head < 0 || task.head >= cfg.num_heads) {
      throw InvalidSpec("task head index inconsistent with suite");
    }
    if (task.train.images.cols() != cfg.input_dim || task.test.images.cols() != cfg.input_dim) {
      throw InvalidSpec("task input dimension inconsistent with suite");
    }
  }
  return cfg;
}

double evaluate(const Mlp& model, const Vec& params, const TaskDataset& task) {
  const int n = task.test.size();
  if (n == 0) throw InvalidInput("evaluate: empty test set");
  const RowMat logits = model.batch_logits(params, task.test.images, task.head);
  const int c = static_cast<int>(logits.cols());
  long correct = 0;
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < c; ++j) {
      if (logits(i, j) > logits(i, best)) best = j;  // strict: ties keep lowest index
    }
    if (best == task.label_map.at(task.test.labels[i])) ++correct;
  }
  return static_cast<double>(correct) / n;
}

namespace {

struct MethodState {
  std::unique_ptr<OgdState> ogd;
  EwcState ewc;
  EpisodicMemory memory;
};

Batch gather_mtl_batch(const std::vector<TaskDataset>& suite, int tasks_seen, int batch_size,
                       Rng& rng) {
  long total = 0;
  for (int t = 0; t < tasks_seen; ++t) total += suite[t].train.size();
  Batch batch;
  batch.inputs.resize(batch_size, suite[0].train.images.cols());
  batch.labels.resize(batch_size);
  batch.heads.resize(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    long pick = static_cast<long>(rng.below(static_cast<std::uint64_t>(total)));
    int t = 0;
    while (pick >= suite[t].train.size()) pick -= suite[t].train.size(), ++t;
    const auto& task = suite[t];
    batch.inputs.row(i) = task.train.images.row(static_cast<int>(pick));
    batch.labels[i] = task.label_map.at(task.train.labels[static_cast<int>(pick)]);
    batch.heads[i] = task.head;
  }
  return batch;
}

}  // namespace

RunResult train_sequence(const std::vector<TaskDataset>& suite, const TrainConfig& config,
                         std::uint64_t seed) {
  config.validate();
  if (suite.empty()) throw InvalidSpec("train_sequence: empty suite");
  for (const auto& task : suite) {
    if (task.train.size() == 0) throw InvalidSpec("train_sequence: task with empty train set");
    for (int i = 0; i < task.train.size(); ++i) {
      if (!task.label_map.count(task.train.labels[i])) {
        throw InvalidSpec("train_sequence: train label missing from label_map");
      }
    }
  }

  const Mlp model(model_config_for_suite(suite, config.hidden_dims));
  Vec params = model.init_params(mix_seed(seed, static_cast<std::uint64_t>(Stream::kInit)));
  Rng shuffle_rng = make_stream(seed, Stream::kShuffle);
  Rng subsample_rng = make_stream(seed, Stream::kSubsample);
  Rng mtl_rng = make_stream(seed, Stream::kMtl);

  MethodState state;
  if (config.method == Method::kOgd) {
    state.ogd = std::make_unique<OgdState>(model, config.ogd);
  }
  state.ewc.lambda = config.ewc_lambda;
  state.memory.capacity_per_task = config.agem_capacity_per_task;
  state.memory.ref_batch_size = config.agem_ref_batch_size;

  RunResult result;
  result.seed = seed;
  long step = 0;

  for (std::size_t t = 0; t < suite.size(); ++t) {
    const TaskDataset& task = suite[t];
    std::vector<int> order(task.train.size());
    for (int epoch = 0; epoch < config.epochs_per_task; ++epoch) {
      for (int i = 0; i < task.train.size(); ++i) order[i] = i;
      shuffle_rng.shuffle(order);
      for (int begin = 0; begin < task.train.size(); begin += config.batch_size) {
        const int end = std::min<int>(begin + config.batch_size, task.train.size());
        Batch batch;
        // MTL draws from the union of tasks seen so far; before task 2 that
        // union is the current task, so every method trains identically there.
        if (config.method == Method::kMtl && t > 0) {
          batch = gather_mtl_batch(suite, static_cast<int>(t) + 1, config.batch_size, mtl_rng);
        } else {
          batch = gather_batch(task, {order.begin() + begin, order.begin() + end});
        }
        switch (config.method) {
          case Method::kOgd:
            params = ogd_step(model, params, batch, *state.ogd, config.lr);
            break;
          case Method::kSgd:
          case Method::kMtl:
            params = sgd_step(model, params, batch, config.lr);
            break;
          case Method::kEwc:
            params = ewc_step(model, params, batch, state.ewc, config.lr);
            break;
          case Method::kAgem:
            params = agem_step(model, params, batch, state.memory, config.lr, subsample_rng);
            break;
        }
        ++step;
        if (config.eval_every > 0 && step % config.eval_every == 0) {
          for (const auto& eval_task : suite) {
            result.trajectory.push_back(
                {step, eval_task.task_id, evaluate(model, params, eval_task)});
          }
        }
      }
    }
    // task boundary
    switch (config.method) {
      case Method::kOgd:
        ogd_end_task(model, params, task, *state.ogd, subsample_rng);
        break;
      case Method::kAgem:
        agem_end_task(state.memory, task, subsample_rng);
        break;
      case Method::kEwc: {
        const int samples = std::min(config.ewc_fisher_samples, task.train.size());
        state.ewc.anchors.push_back(
            {params, ewc_fisher(model, params, task, samples, subsample_rng)});
        break;
      }
      case Method::kSgd:
      case Method::kMtl:
        break;
    }
  }

  result.final_accuracy.reserve(suite.size());
  for (const auto& task : suite) {
    result.final_accuracy.push_back(evaluate(model, params, task));
  }
  return result;
}

std::vector<RunResult> run_seeds(const std::vector<TaskDataset>& suite,
                                 const TrainConfig& config,
                                 const std::vector<std::uint64_t>& seeds, int jobs) {
  std::vector<RunResult> results(seeds.size());
  if (jobs < 1) jobs = 1;
  if (jobs == 1 || seeds.size() <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      results[i] = train_sequence(suite, config, seeds[i]);
    }
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      try {
        results[i] = train_sequence(suite, config, seeds[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min<int>(jobs, static_cast<int>(seeds.size())); ++j) {
    pool.emplace_back(worker);
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return results;
}

SummaryTable aggregate(const std::vector<RunResult>& results) {
  SummaryTable table;
  if (results.empty()) return table;
  const std::size_t tasks = results[0].final_accuracy.size();
  for (const auto& r : results) {
    if (r.final_accuracy.size() != tasks) {
      throw InvalidInput("aggregate: inconsistent task counts across results");
    }
  }
  table.num_seeds = static_cast<int>(results.size());
  table.mean_pct.resize(tasks);
  table.std_pct.resize(tasks);
  for (std::size_t t = 0; t < tasks; ++t) {
    double mean = 0;
    for (const auto& r : results) mean += r.final_accuracy[t];
    mean /= results.size();
    table.mean_pct[t] = 100.0 * mean;
    if (results.size() >= 2) {
      double ss = 0;
      for (const auto& r : results) {
        ss += (r.final_accuracy[t] - mean) * (r.final_accuracy[t] - mean);
      }
      table.std_pct[t] = 100.0 * std::sqrt(ss / (results.size() - 1));
    } else {
      table.std_pct[t] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return table;
}

}  // namespace ogdbench
