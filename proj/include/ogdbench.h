/* ogdbench C API: continual-learning optimizer benchmark.
 *
 * All functions returning int yield an OGDB_* status code; on any failure
 * ogdb_last_error() describes the problem (thread-local message). Objects
 * are opaque handles released with the matching *_free function.
 */
#ifndef OGDBENCH_H
#define OGDBENCH_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define OGDB_API __declspec(dllexport)
#else
#define OGDB_API __attribute__((visibility("default")))
#endif

enum ogdb_status {
  OGDB_OK = 0,
  OGDB_ERR_FAIL = 1,    /* generic failure / failed verification        */
  OGDB_ERR_DATA = 2,    /* data files missing or malformed              */
  OGDB_ERR_CONFIG = 3,  /* invalid config, unknown key, bad value       */
};

typedef struct ogdb_dataset ogdb_dataset;  /* loaded MNIST train+test    */
typedef struct ogdb_spec ogdb_spec;        /* one experiment cell        */
typedef struct ogdb_result ogdb_result;    /* trained + aggregated runs  */

OGDB_API const char* ogdb_version(void);
OGDB_API const char* ogdb_last_error(void);

/* --- data ------------------------------------------------------------- */

/* Loads the four standard MNIST IDX files (plain or .gz) from data_dir. */
OGDB_API int ogdb_dataset_load(const char* data_dir, ogdb_dataset** out);
OGDB_API void ogdb_dataset_free(ogdb_dataset* dataset);

/* --- experiment specs ---------------------------------------------------- */

OGDB_API int ogdb_spec_default(ogdb_spec** out);
OGDB_API int ogdb_spec_from_file(const char* path, ogdb_spec** out);
/* Resolves a named preset into one or more cells. Free the array with
 * ogdb_spec_list_free. */
OGDB_API int ogdb_preset_resolve(const char* name, ogdb_spec*** out_specs, int* out_count);
OGDB_API void ogdb_spec_list_free(ogdb_spec** specs, int count);
/* Newline-separated preset names; pointer owned by the library. */
OGDB_API const char* ogdb_preset_list(void);

/* Sets `key = value`, same keys as the config file format. */
OGDB_API int ogdb_spec_set(ogdb_spec* spec, const char* key, const char* value);
OGDB_API const char* ogdb_spec_name(const ogdb_spec* spec);
/* Canonical config text; pointer valid until the next call on this spec. */
OGDB_API const char* ogdb_spec_serialize(ogdb_spec* spec);
OGDB_API void ogdb_spec_free(ogdb_spec* spec);

/* --- training ------------------------------------------------------------- */

typedef void (*ogdb_log_fn)(const char* line, void* ctx);

/* Trains every configured method over all seeds. When out_dir is non-NULL,
 * writes <out_dir>/<name>-<hash8>/{config.cfg,raw.csv,summary.md} (plus
 * trajectory.csv when eval_every > 0); outputs are byte-reproducible for
 * identical inputs. jobs > 1 parallelizes across seeds. */
OGDB_API int ogdb_run(const ogdb_dataset* dataset, const ogdb_spec* spec,
                      const char* out_dir, int jobs, ogdb_log_fn log, void* log_ctx,
                      ogdb_result** out);

OGDB_API int ogdb_result_num_methods(const ogdb_result* result);
OGDB_API const char* ogdb_result_method(const ogdb_result* result, int method_index);
OGDB_API int ogdb_result_num_tasks(const ogdb_result* result);
OGDB_API int ogdb_result_num_seeds(const ogdb_result* result);
/* Per-seed final accuracy in [0,1]. */
OGDB_API double ogdb_result_accuracy(const ogdb_result* result, int method_index,
                                     int seed_index, int task_index);
/* Aggregates in percent; std is NaN with fewer than 2 seeds. */
OGDB_API double ogdb_result_mean_pct(const ogdb_result* result, int method_index,
                                     int task_index);
OGDB_API double ogdb_result_std_pct(const ogdb_result* result, int method_index,
                                    int task_index);
OGDB_API const char* ogdb_result_out_dir(const ogdb_result* result);
OGDB_API void ogdb_result_free(ogdb_result* result);

/* --- reporting -------------------------------------------------------------- */

/* Merges previously written raw.csv files into one comparison table and
 * writes it to out_path (markdown). Never re-runs training. */
OGDB_API int ogdb_report(const char* const* raw_csv_paths, int count, const char* out_path);

/* --- verification ------------------------------------------------------------ */

/* Runs the property suite on synthetic instances; emits one line per
 * property through the callback. Returns OGDB_OK iff all properties pass.
 * inject_sign_flip is a debug mutation that must make the descent-identity
 * property fail. */
OGDB_API int ogdb_verify(int dims, int inject_sign_flip, ogdb_log_fn log, void* log_ctx);

#ifdef __cplusplus
}
#endif

#endif /* OGDBENCH_H */
