// ogdbench command line front end. Talks to the library exclusively through
// the C API in ogdbench.h.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "ogdbench.h"

namespace {

void print_line(const char* line, void*) { std::printf("%s\n", line); }

struct SpecList {
  ogdb_spec** specs = nullptr;
  int count = 0;
  ~SpecList() { ogdb_spec_list_free(specs, count); }
};

int fail(const char* what) {
  std::fprintf(stderr, "ogdbench: %s: %s\n", what, ogdb_last_error());
  return OGDB_ERR_FAIL;
}

// Loads cells from --preset or --config and applies --set/--seed-list
// overrides to every cell.
int load_cells(const std::string& preset, const std::string& config_path,
               const std::vector<std::string>& overrides, const std::string& seed_list,
               SpecList& out) {
  if (preset.empty() == config_path.empty()) {
    std::fprintf(stderr, "ogdbench: pass exactly one of --preset or --config\n");
    return OGDB_ERR_CONFIG;
  }
  if (!preset.empty()) {
    if (int rc = ogdb_preset_resolve(preset.c_str(), &out.specs, &out.count)) {
      fail("preset");
      return rc;
    }
  } else {
    ogdb_spec* spec = nullptr;
    if (int rc = ogdb_spec_from_file(config_path.c_str(), &spec)) {
      fail("config");
      return rc;
    }
    out.specs = new ogdb_spec*[1];
    out.specs[0] = spec;
    out.count = 1;
  }
  for (int i = 0; i < out.count; ++i) {
    if (!seed_list.empty()) {
      if (int rc = ogdb_spec_set(out.specs[i], "seeds", seed_list.c_str())) {
        fail("--seed-list");
        return rc;
      }
    }
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "ogdbench: --set expects key=value, got '%s'\n", kv.c_str());
        return OGDB_ERR_CONFIG;
      }
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      if (int rc = ogdb_spec_set(out.specs[i], key.c_str(), value.c_str())) {
        fail("--set");
        return rc;
      }
    }
  }
  return OGDB_OK;
}

int run_cells(const SpecList& cells, const std::string& data_dir, const std::string& out_dir,
              int jobs) {
  ogdb_dataset* dataset = nullptr;
  if (int rc = ogdb_dataset_load(data_dir.c_str(), &dataset)) {
    fail("data");
    return rc;
  }
  int rc = OGDB_OK;
  for (int i = 0; i < cells.count && rc == OGDB_OK; ++i) {
    ogdb_result* result = nullptr;
    rc = ogdb_run(dataset, cells.specs[i], out_dir.empty() ? nullptr : out_dir.c_str(), jobs,
                  print_line, nullptr, &result);
    if (rc != OGDB_OK) {
      fail("run");
    } else {
      // compact console table
      const int tasks = ogdb_result_num_tasks(result);
      for (int m = 0; m < ogdb_result_num_methods(result); ++m) {
        std::printf("%-20s %-5s", ogdb_spec_name(cells.specs[i]), ogdb_result_method(result, m));
        for (int t = 0; t < tasks; ++t) {
          std::printf("  %5.1f", ogdb_result_mean_pct(result, m, t));
        }
        std::printf("\n");
      }
    }
    ogdb_result_free(result);
  }
  ogdb_dataset_free(dataset);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual-learning optimizer benchmark (OGD and baselines on MNIST suites)"};
  app.require_subcommand(1);

  std::string data_dir, out_dir = "results", config_path, preset, seed_list;
  std::vector<std::string> overrides;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    if (needs_data) {
      cmd->add_option("--data-dir", data_dir, "directory with the MNIST IDX files")
          ->envname("OGDBENCH_DATA_DIR")
          ->required();
    }
    cmd->add_option("--config", config_path, "experiment config file");
    cmd->add_option("--preset", preset, "named preset (see `ogdbench presets`)");
    cmd->add_option("--out", out_dir, "output root directory");
    cmd->add_option("--seed-list", seed_list, "comma-separated seeds override");
    cmd->add_option("--set", overrides, "config override key=value (repeatable)");
    cmd->add_option("--jobs", jobs, "parallel runs across seeds");
  };

  CLI::App* run = app.add_subcommand("run", "train one experiment and write reports");
  add_common(run, true);

  CLI::App* grid = app.add_subcommand("grid", "train every cell of a multi-cell preset");
  add_common(grid, true);

  CLI::App* report =
      app.add_subcommand("report", "re-render summary tables from existing raw.csv files");
  std::vector<std::string> raw_paths;
  std::string report_out = "summary.md";
  report->add_option("raw_csv", raw_paths, "raw.csv files to merge")->required();
  report->add_option("--out", report_out, "output markdown path");

  CLI::App* verify = app.add_subcommand("verify", "run the property suite on synthetic data");
  int dims = 1000;
  bool inject_sign_flip = false;
  verify->add_option("--dims", dims, "problem dimension for the basis properties");
  verify->add_flag("--inject-sign-flip", inject_sign_flip,
                   "debug: negate the projection; descent identity must fail");

  CLI::App* presets = app.add_subcommand("presets", "list preset names");

  CLI11_PARSE(app, argc, argv);

  if (presets->parsed()) {
    std::printf("%s", ogdb_preset_list());
    return 0;
  }
  if (verify->parsed()) {
    return ogdb_verify(dims, inject_sign_flip ? 1 : 0, print_line, nullptr) == OGDB_OK ? 0 : 1;
  }
  if (report->parsed()) {
    std::vector<const char*> paths;
    for (const auto& p : raw_paths) paths.push_back(p.c_str());
    if (int rc = ogdb_report(paths.data(), static_cast<int>(paths.size()), report_out.c_str())) {
      return fail("report");
    }
    std::printf("wrote %s\n", report_out.c_str());
    return 0;
  }

  SpecList cells;
  if (int rc = load_cells(preset, config_path, overrides, seed_list, cells)) return rc;
  if (run->parsed() && cells.count != 1) {
    std::fprintf(stderr,
                 "ogdbench: preset '%s' has %d cells; use the `grid` subcommand\n",
                 preset.c_str(), cells.count);
    return OGDB_ERR_CONFIG;
  }
  return run_cells(cells, data_dir, out_dir, jobs);
}
