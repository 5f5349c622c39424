#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ogdbench/harness.hpp"
#include "ogdbench/tasks.hpp"

namespace ogdbench {

// One runnable experiment cell: a task suite, the methods to train on it,
// and the shared training hyperparameters.
struct ExperimentSpec {
  std::string name = "experiment";
  SuiteSpec suite;
  std::vector<Method> methods = {Method::kOgd};
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  void validate() const;
};

// Config file syntax: `key = value` lines, `#` comments, keys as documented
// in the README (they mirror the TrainConfig / SuiteSpec fields). Unknown
// keys are a hard error.
ExperimentSpec parse_config_text(const std::string& text, const std::string& origin);
ExperimentSpec load_config_file(const std::string& path);

// Applies a `key=value` override; throws InvalidSpec for unknown keys.
void apply_override(ExperimentSpec& spec, const std::string& key, const std::string& value);

// Canonical `key = value` rendering: parse(serialize(s)) == s, and the text
// is the hashing basis for run identification.
std::string serialize_config(const ExperimentSpec& spec);

// FNV-1a over the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentSpec& spec);

// Named presets, one per benchmark table/figure; each resolves to one or
// more experiment cells.
std::vector<std::string> preset_names();
std::vector<ExperimentSpec> resolve_preset(const std::string& name);

}  // namespace ogdbench
