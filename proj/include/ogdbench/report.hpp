#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ogdbench/config.hpp"
#include "ogdbench/harness.hpp"
#include "ogdbench/mnist.hpp"

namespace ogdbench {

struct RawRow {
  std::string method;
  std::string suite;
  std::uint64_t seed = 0;
  int task_id = 0;  // 0-based
  double final_accuracy = 0.0;
  std::string config_hash;
};

struct MethodRuns {
  Method method;
  std::vector<RunResult> runs;
  SummaryTable summary;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::string hash;
  std::vector<MethodRuns> methods;
  std::string out_dir;  // empty when nothing was written
};

using LogFn = std::function<void(const std::string&)>;

// Trains every configured method on the suite and, when `out_root` is
// non-empty, writes <out_root>/<name>-<hash8>/{config.cfg,raw.csv,summary.md}
// (+ trajectory.csv when mid-training evaluation is on). Output bytes are a
// pure function of (spec, data): re-running reproduces them exactly.
ExperimentResult run_experiment(const MnistData& data, const ExperimentSpec& spec,
                                const std::string& out_root, int jobs = 1,
                                const LogFn& log = nullptr);

// Formatting / serialization primitives (also used by `report`).
std::string render_raw_csv(const std::vector<RawRow>& rows);
std::vector<RawRow> parse_raw_csv(const std::string& text, const std::string& origin);
std::vector<RawRow> load_raw_csv(const std::string& path);
std::string render_summary_md(const ExperimentResult& result);

// Merged table over previously written raw.csv files, grouped by
// (suite, config, method); re-rendering never re-runs training.
std::string render_merged_report(const std::vector<RawRow>& rows);

std::vector<RawRow> rows_from_result(const ExperimentResult& result);

}  // namespace ogdbench
