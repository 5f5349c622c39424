#include "ogdbench.h"

#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "ogdbench/config.hpp"
#include "ogdbench/errors.hpp"
#include "ogdbench/mnist.hpp"
#include "ogdbench/report.hpp"
#include "ogdbench/verify.hpp"

using namespace ogdbench;

struct ogdb_dataset {
  MnistData data;
};

struct ogdb_spec {
  ExperimentSpec spec;
  std::string serialized;  // buffer backing ogdb_spec_serialize
};

struct ogdb_result {
  ExperimentResult result;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

// Exceptions carry the error class; map them onto the C status codes.
int from_exception() {
  try {
    throw;
  } catch (const InvalidSpec& e) {
    set_error(e.what());
    return OGDB_ERR_CONFIG;
  } catch (const FormatError& e) {
    set_error(e.what());
    return OGDB_ERR_DATA;
  } catch (const std::exception& e) {
    set_error(e.what());
    return OGDB_ERR_FAIL;
  } catch (...) {
    set_error("unknown error");
    return OGDB_ERR_FAIL;
  }
}

int require(bool ok, const char* message) {
  if (ok) return OGDB_OK;
  set_error(message);
  return OGDB_ERR_FAIL;
}

}  // namespace

extern "C" {

const char* ogdb_version(void) { return "0.1.0"; }

const char* ogdb_last_error(void) { return g_last_error.c_str(); }

int ogdb_dataset_load(const char* data_dir, ogdb_dataset** out) {
  if (int rc = require(data_dir && out, "null argument")) return rc;
  try {
    auto handle = std::make_unique<ogdb_dataset>();
    handle->data = load_mnist_dir(data_dir);
    *out = handle.release();
    return OGDB_OK;
  } catch (...) {
    return from_exception();
  }
}

void ogdb_dataset_free(ogdb_dataset* dataset) { delete dataset; }

int ogdb_spec_default(ogdb_spec** out) {
  if (int rc = require(out != nullptr, "null argument")) return rc;
  *out = new ogdb_spec();
  return OGDB_OK;
}

int ogdb_spec_from_file(const char* path, ogdb_spec** out) {
  if (int rc = require(path && out, "null argument")) return rc;
  try {
    auto handle = std::make_unique<ogdb_spec>();
    handle->spec = load_config_file(path);
    *out = handle.release();
    return OGDB_OK;
  } catch (...) {
    return from_exception();
  }
}

int ogdb_preset_resolve(const char* name, ogdb_spec*** out_specs, int* out_count) {
  if (int rc = require(name && out_specs && out_count, "null argument")) return rc;
  try {
    const std::vector<ExperimentSpec> cells = resolve_preset(name);
    ogdb_spec** list = new ogdb_spec*[cells.size()];
    for (std::size_t i = 0; i < cells.size(); ++i) {
      list[i] = new ogdb_spec{cells[i], {}};
    }
    *out_specs = list;
    *out_count = static_cast<int>(cells.size());
    return OGDB_OK;
  } catch (...) {
    return from_exception();
  }
}

void ogdb_spec_list_free(ogdb_spec** specs, int count) {
  if (!specs) return;
  for (int i = 0; i < count; ++i) delete specs[i];
  delete[] specs;
}

const char* ogdb_preset_list(void) {
  static const std::string names = [] {
    std::string out;
    for (const auto& name : preset_names()) out += name + "\n";
    return out;
  }();
  return names.c_str();
}

int ogdb_spec_set(ogdb_spec* spec, const char* key, const char* value) {
  if (int rc = require(spec && key && value, "null argument")) return rc;
  try {
    apply_override(spec->spec, key, value);
    return OGDB_OK;
  } catch (...) {
    return from_exception();
  }
}

const char* ogdb_spec_name(const ogdb_spec* spec) {
  return spec ? spec->spec.name.c_str() : "";
}

const char* ogdb_spec_serialize(ogdb_spec* spec) {
  if (!spec) return "";
  spec->serialized = serialize_config(spec->spec);
  return spec->serialized.c_str();
}

void ogdb_spec_free(ogdb_spec* spec) { delete spec; }

int ogdb_run(const ogdb_dataset* dataset, const ogdb_spec* spec, const char* out_dir,
             int jobs, ogdb_log_fn log, void* log_ctx, ogdb_result** out) {
  if (int rc = require(dataset && spec && out, "null argument")) return rc;
  try {
    LogFn logger;
    if (log) {
      logger = [log, log_ctx](const std::string& line) { log(line.c_str(), log_ctx); };
    }
    auto handle = std::make_unique<ogdb_result>();
    handle->result = run_experiment(dataset->data, spec->spec,
                                    out_dir ? std::string(out_dir) : std::string(), jobs,
                                    logger);
    *out = handle.release();
    return OGDB_OK;
  } catch (...) {
    return from_exception();
  }
}

int ogdb_result_num_methods(const ogdb_result* result) {
  return result ? static_cast<int>(result->result.methods.size()) : 0;
}

const char* ogdb_result_method(const ogdb_result* result, int method_index) {
  if (!result || method_index < 0 ||
      method_index >= static_cast<int>(result->result.methods.size())) {
    return "";
  }
  return to_string(result->result.methods[method_index].method);
}

int ogdb_result_num_tasks(const ogdb_result* result) {
  return result ? result->result.spec.suite.num_tasks : 0;
}

int ogdb_result_num_seeds(const ogdb_result* result) {
  return result ? static_cast<int>(result->result.spec.seeds.size()) : 0;
}

double ogdb_result_accuracy(const ogdb_result* result, int method_index, int seed_index,
                            int task_index) {
  if (!result) return -1.0;
  const auto& methods = result->result.methods;
  if (method_index < 0 || method_index >= static_cast<int>(methods.size())) return -1.0;
  const auto& runs = methods[method_index].runs;
  if (seed_index < 0 || seed_index >= static_cast<int>(runs.size())) return -1.0;
  const auto& acc = runs[seed_index].final_accuracy;
  if (task_index < 0 || task_index >= static_cast<int>(acc.size())) return -1.0;
  return acc[task_index];
}

double ogdb_result_mean_pct(const ogdb_result* result, int method_index, int task_index) {
  if (!result) return -1.0;
  const auto& methods = result->result.methods;
  if (method_index < 0 || method_index >= static_cast<int>(methods.size())) return -1.0;
  const auto& mean = methods[method_index].summary.mean_pct;
  if (task_index < 0 || task_index >= static_cast<int>(mean.size())) return -1.0;
  return mean[task_index];
}

double ogdb_result_std_pct(const ogdb_result* result, int method_index, int task_index) {
  if (!result) return -1.0;
  const auto& methods = result->result.methods;
  if (method_index < 0 || method_index >= static_cast<int>(methods.size())) return -1.0;
  const auto& stdev = methods[method_index].summary.std_pct;
  if (task_index < 0 || task_index >= static_cast<int>(stdev.size())) return -1.0;
  return stdev[task_index];
}

const char* ogdb_result_out_dir(const ogdb_result* result) {
  return result ? result->result.out_dir.c_str() : "";
}

void ogdb_result_free(ogdb_result* result) { delete result; }

int ogdb_report(const char* const* raw_csv_paths, int count, const char* out_path) {
  if (int rc = require(raw_csv_paths && out_path && count > 0, "null or empty argument")) {
    return rc;
  }
  try {
    std::vector<RawRow> rows;
    for (int i = 0; i < count; ++i) {
      const auto file_rows = load_raw_csv(raw_csv_paths[i]);
      rows.insert(rows.end(), file_rows.begin(), file_rows.end());
    }
    const std::string md = render_merged_report(rows);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw FormatError(out_path, "cannot open for writing");
    out << md;
    return OGDB_OK;
  } catch (...) {
    return from_exception();
  }
}

int ogdb_verify(int dims, int inject_sign_flip, ogdb_log_fn log, void* log_ctx) {
  try {
    VerifyOptions options;
    if (dims > 0) options.dims = dims;
    options.inject_sign_flip = inject_sign_flip != 0;
    const auto results = run_verify(options);
    bool all_pass = true;
    for (const auto& r : results) {
      all_pass = all_pass && r.pass;
      if (log) {
        char line[256];
        std::snprintf(line, sizeof line, "%s %-28s residual %.3e%s%s",
                      r.pass ? "PASS" : "FAIL", r.name.c_str(), r.residual,
                      r.detail.empty() ? "" : "  ", r.detail.c_str());
        log(line, log_ctx);
      }
    }
    if (!all_pass) {
      set_error("property verification failed");
      return OGDB_ERR_FAIL;
    }
    return OGDB_OK;
  } catch (...) {
    return from_exception();
  }
}

}  // extern "C"
