#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ogdbench/basis.hpp"
#include "ogdbench/model.hpp"
#include "ogdbench/rng.hpp"
#include "ogdbench/tasks.hpp"

namespace ogdbench {

enum class OgdVariant { kAll, kAve, kGtl };

const char* to_string(OgdVariant v);
OgdVariant ogd_variant_from_string(const std::string& name);

struct OgdConfig {
  OgdVariant variant = OgdVariant::kGtl;
  int budget_per_task = 200;
  double drop_tol = 1e-8;
};

// Basis of stored model-gradient directions plus its factored mirror for the
// hot projection path. The dense basis is authoritative; the mirror is an
// algebraically equivalent accelerator (see FastProjector).
struct OgdState {
  OgdState(const Mlp& model, const OgdConfig& config)
      : config(config), basis(model.param_count(), config.drop_tol), fast(model) {}

  OgdConfig config;
  OrthoBasis basis;
  FastProjector fast;

  // g <- g - projection onto span(basis)
  void project_out(Vec& g);
};

struct EwcState {
  struct Anchor {
    Vec params;
    Vec fisher;
  };
  std::vector<Anchor> anchors;
  double lambda = 100.0;
};

struct EpisodicMemory {
  RowMat inputs;              // one stored example per row
  std::vector<int> labels;    // head-local
  std::vector<int> heads;
  std::vector<int> task_ids;  // provenance tag per stored row
  int capacity_per_task = 200;
  int ref_batch_size = 0;  // 0 = use the whole memory

  int size() const { return static_cast<int>(labels.size()); }
};

// --- per-step updates -------------------------------------------------------

Vec sgd_step(const Mlp& model, const Vec& params, const Batch& batch, double lr);

Vec ogd_step(const Mlp& model, const Vec& params, const Batch& batch, OgdState& state,
             double lr);

Vec ewc_step(const Mlp& model, const Vec& params, const Batch& batch, const EwcState& state,
             double lr);

Vec agem_step(const Mlp& model, const Vec& params, const Batch& batch,
              const EpisodicMemory& memory, double lr, Rng& sample_rng);

// --- task-boundary updates ----------------------------------------------------

// Stores (up to budget) orthogonalized model-gradient directions evaluated at
// the end-of-task parameters. Selection is uniform over the task's training
// set, seeded by `rng`.
void ogd_end_task(const Mlp& model, const Vec& params, const TaskDataset& task,
                  OgdState& state, Rng& rng);

void agem_end_task(EpisodicMemory& memory, const TaskDataset& task, Rng& rng);

// Diagonal Fisher estimate: mean squared loss gradient over `sample_count`
// uniformly drawn training examples.
Vec ewc_fisher(const Mlp& model, const Vec& params, const TaskDataset& task, int sample_count,
               Rng& rng);

// Head-local batch assembly from a task's training set.
Batch gather_batch(const TaskDataset& task, const std::vector<int>& rows);

}  // namespace ogdbench
