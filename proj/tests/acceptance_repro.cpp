// Desk-scale reproduction acceptance suite: trains the benchmark suites at
// the reference hyperparameters (5 epochs, batch 10, lr 1e-3, budget 200)
// over 3 seeds and checks the headline table numbers. One PASS/FAIL line per
// criterion; exit 0 iff all pass.
//
// Needs the MNIST IDX files: pass --data-dir or set OGDBENCH_DATA_DIR.
// Finished (method, seed) cells are cached under ./accept_cache keyed by the
// exact config hash, so an interrupted suite resumes where it stopped.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ogdbench/config.hpp"
#include "ogdbench/harness.hpp"
#include "ogdbench/mnist.hpp"
#include "ogdbench/tasks.hpp"

using namespace ogdbench;
namespace fs = std::filesystem;

namespace {

constexpr int kSeedCount = 3;

struct Runner {
  MnistData data;
  fs::path cache_dir;
  int jobs = 2;

  std::mutex suite_mutex;
  std::string suite_key;
  std::vector<TaskDataset> suite;  // one suite resident at a time

  const std::vector<TaskDataset>& get_suite(const ExperimentSpec& spec) {
    const std::string key = spec.suite.str();
    if (key != suite_key) {
      suite.clear();
      suite = build_suite(data, spec.suite);
      suite_key = key;
    }
    return suite;
  }

  fs::path cell_path(const ExperimentSpec& spec, Method method, std::uint64_t seed) {
    return cache_dir / (config_hash(spec) + "-" + to_string(method) + "-" +
                        std::to_string(seed) + ".csv");
  }

  bool load_cell(const fs::path& path, std::vector<double>& accs) {
    std::ifstream in(path);
    if (!in) return false;
    accs.clear();
    double v;
    while (in >> v) accs.push_back(v);
    return !accs.empty();
  }

  void store_cell(const fs::path& path, const std::vector<double>& accs) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp);
      for (double a : accs) out << std::scientific << std::setprecision(17) << a << "\n";
    }
    fs::rename(tmp, path);
  }

  // mean final accuracy (percent) per task for one method, over the spec's
  // seeds, training only the cells missing from the cache
  std::vector<double> mean_pct(const ExperimentSpec& spec, Method method) {
    ExperimentSpec cell_spec = spec;
    cell_spec.methods = {method};
    TrainConfig cfg = cell_spec.train;
    cfg.method = method;

    std::vector<std::vector<double>> per_seed(cell_spec.seeds.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < cell_spec.seeds.size(); ++i) {
      if (!load_cell(cell_path(cell_spec, method, cell_spec.seeds[i]), per_seed[i])) {
        pending.push_back(i);
      }
    }
    if (!pending.empty()) {
      const auto& tasks = get_suite(cell_spec);
      std::atomic<std::size_t> next{0};
      std::mutex io_mutex;
      auto worker = [&] {
        for (;;) {
          const std::size_t k = next.fetch_add(1);
          if (k >= pending.size()) return;
          const std::size_t i = pending[k];
          const RunResult run = train_sequence(tasks, cfg, cell_spec.seeds[i]);
          per_seed[i] = run.final_accuracy;
          std::lock_guard<std::mutex> lock(io_mutex);
          store_cell(cell_path(cell_spec, method, cell_spec.seeds[i]), per_seed[i]);
          std::printf("  [cell] %s %s seed %llu done\n", cell_spec.name.c_str(),
                      to_string(method),
                      static_cast<unsigned long long>(cell_spec.seeds[i]));
          std::fflush(stdout);
        }
      };
      std::vector<std::thread> pool;
      const int n_workers = std::min<int>(jobs, static_cast<int>(pending.size()));
      for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    std::vector<double> mean(per_seed[0].size(), 0.0);
    for (const auto& accs : per_seed) {
      for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += accs[t];
    }
    for (double& m : mean) m = 100.0 * m / static_cast<double>(per_seed.size());
    return mean;
  }
};

ExperimentSpec reference_spec(const std::string& name) {
  ExperimentSpec spec;
  spec.name = name;
  spec.suite.seed = 42;
  spec.seeds.clear();
  for (int i = 1; i <= kSeedCount; ++i) spec.seeds.push_back(i);
  return spec;  // train defaults: 5 epochs, batch 10, lr 1e-3, budget 200
}

ExperimentSpec split5_spec(const std::string& name,
                           const std::vector<std::vector<int>>& partitions) {
  ExperimentSpec spec = reference_spec(name);
  spec.suite.suite = SuiteKind::kSplit;
  spec.suite.num_tasks = static_cast<int>(partitions.size());
  spec.suite.partitions = partitions;
  return spec;
}

struct Criterion {
  std::string name;
  bool pass = false;
  std::string detail;
};

void report(std::vector<Criterion>& all, const std::string& name, bool pass,
            const std::string& detail) {
  all.push_back({name, pass, detail});
  std::printf("%s  %-22s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", x);
  return buf;
}

double avg_first_four(const std::vector<double>& v) {
  double s = 0;
  const std::size_t n = std::min<std::size_t>(4, v.size());
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s / static_cast<double>(n);
}

}  // namespace

int main(int argc, char** argv) {
  std::string data_dir;
  if (const char* env = std::getenv("OGDBENCH_DATA_DIR")) data_dir = env;
  int jobs = 2;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--data-dir") == 0 && i + 1 < argc) data_dir = argv[++i];
    if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc) jobs = std::atoi(argv[++i]);
  }
  if (data_dir.empty() || !fs::exists(fs::path(data_dir) / "train-images-idx3-ubyte")) {
    std::printf(
        "SKIP acceptance_repro: MNIST not found (set OGDBENCH_DATA_DIR or pass "
        "--data-dir; see scripts/fetch_mnist.sh)\n");
    return 0;
  }

  Runner runner;
  runner.data = load_mnist_dir(data_dir);
  runner.cache_dir = "accept_cache";
  runner.jobs = jobs;
  fs::create_directories(runner.cache_dir);

  std::vector<Criterion> all;

  // 12: single-task sanity -- 5 epochs of SGD on plain MNIST
  {
    ExperimentSpec spec = reference_spec("single-task");
    spec.suite.suite = SuiteKind::kRotated;
    spec.suite.num_tasks = 1;
    spec.suite.angles = {0.0};
    const double acc = runner.mean_pct(spec, Method::kSgd)[0];
    report(all, "single-task-sanity", acc >= 92.0,
           "SGD plain-MNIST accuracy " + fmt(acc) + "% (need >= 92)");
  }

  // 7: split 5-task, table-3 shape
  const auto split_a = split5_spec("split5-a", {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}});
  {
    const double ogd = runner.mean_pct(split_a, Method::kOgd)[0];
    const double sgd = runner.mean_pct(split_a, Method::kSgd)[0];
    const bool pass = ogd >= 95.0 && sgd <= 95.0 && ogd - sgd >= 3.0;
    report(all, "split5-task1", pass,
           "OGD " + fmt(ogd) + "% (need >= 95), SGD " + fmt(sgd) +
               "% (need <= 95), gap " + fmt(ogd - sgd) + " (need >= 3)");
  }

  // 11: method ordering on split 5-task, two label partitions
  {
    const auto split_b = split5_spec("split5-b", {{0, 5}, {1, 6}, {2, 7}, {3, 8}, {4, 9}});
    bool pass = true;
    std::string detail;
    for (const auto& spec : {split_a, split_b}) {
      const double mtl = avg_first_four(runner.mean_pct(spec, Method::kMtl));
      const double ogd = avg_first_four(runner.mean_pct(spec, Method::kOgd));
      const double agem = avg_first_four(runner.mean_pct(spec, Method::kAgem));
      const double ewc = avg_first_four(runner.mean_pct(spec, Method::kEwc));
      const double sgd = avg_first_four(runner.mean_pct(spec, Method::kSgd));
      const bool ok = mtl >= ogd && ogd > agem && ogd > ewc && ogd > sgd;
      pass = pass && ok;
      detail += spec.name + ": MTL " + fmt(mtl) + " >= OGD " + fmt(ogd) + " > {AGEM " +
                fmt(agem) + ", EWC " + fmt(ewc) + ", SGD " + fmt(sgd) + "}  ";
    }
    report(all, "split5-ordering", pass, detail);
  }

  // 8: permuted 5-task, table-1 shape
  {
    ExperimentSpec spec = reference_spec("permuted5");
    spec.suite.suite = SuiteKind::kPermuted;
    spec.suite.num_tasks = 5;
    const double ogd = runner.mean_pct(spec, Method::kOgd)[0];
    const double sgd = runner.mean_pct(spec, Method::kSgd)[0];
    const bool pass = std::abs(ogd - 79.5) <= 6.0 && ogd - sgd >= 10.0;
    report(all, "permuted5-task1", pass,
           "OGD " + fmt(ogd) + "% (need 79.5 +/- 6), SGD " + fmt(sgd) + "%, gap " +
               fmt(ogd - sgd) + " (need >= 10)");
  }

  // 9: rotated 5-task, table-2 shape
  {
    ExperimentSpec spec = reference_spec("rotated5");
    spec.suite.suite = SuiteKind::kRotated;
    spec.suite.num_tasks = 5;
    spec.suite.angles = {0, 10, 20, 30, 40};
    const double ogd = runner.mean_pct(spec, Method::kOgd)[0];
    const double sgd = runner.mean_pct(spec, Method::kSgd)[0];
    const bool pass = std::abs(ogd - 75.6) <= 6.0 && ogd - sgd >= 6.0;
    report(all, "rotated5-task1", pass,
           "OGD " + fmt(ogd) + "% (need 75.6 +/- 6), SGD " + fmt(sgd) + "%, gap " +
               fmt(ogd - sgd) + " (need >= 6)");
  }

  // 10: stored-gradient budget trend, rotated 2-task, OGD-GTL
  {
    std::map<int, double> acc;
    for (int budget : {20, 200, 2000}) {
      ExperimentSpec spec = reference_spec("rot2-budget" + std::to_string(budget));
      spec.suite.suite = SuiteKind::kRotated;
      spec.suite.num_tasks = 2;
      spec.suite.angles = {0.0, 45.0};
      spec.train.ogd.budget_per_task = budget;
      acc[budget] = runner.mean_pct(spec, Method::kOgd)[0];
    }
    const bool pass = acc[200] >= acc[20] - 1.0 && acc[2000] >= acc[200] - 1.0;
    report(all, "budget-trend", pass,
           "task-1 accuracy " + fmt(acc[20]) + " -> " + fmt(acc[200]) + " -> " +
               fmt(acc[2000]) + " (non-decreasing within 1 point)");
  }

  bool all_pass = true;
  for (const auto& c : all) all_pass = all_pass && c.pass;
  std::printf("%s\n", all_pass ? "ACCEPTANCE (reproduction): all criteria pass"
                               : "ACCEPTANCE (reproduction): FAILURES present");
  return all_pass ? 0 : 1;
}
