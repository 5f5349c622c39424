#include "ogdbench/optimizers.hpp"

#include <algorithm>

#include "ogdbench/errors.hpp"

namespace ogdbench {

const char* to_string(OgdVariant v) {
  switch (v) {
    case OgdVariant::kAll: return "ALL";
    case OgdVariant::kAve: return "AVE";
    case OgdVariant::kGtl: return "GTL";
  }
  return "?";
}

OgdVariant ogd_variant_from_string(const std::string& name) {
  if (name == "ALL") return OgdVariant::kAll;
  if (name == "AVE") return OgdVariant::kAve;
  if (name == "GTL") return OgdVariant::kGtl;
  throw InvalidSpec("unknown OGD variant: " + name);
}

void OgdState::project_out(Vec& g) {
  if (basis.size() == 0) return;  // exact no-op so OGD reduces to SGD
  if (fast.usable() && fast.size() == basis.size()) {
    fast.apply(g);
  } else {
    basis.project_out(g);
  }
}

Vec sgd_step(const Mlp& model, const Vec& params, const Batch& batch, double lr) {
  if (batch.size() == 0) throw InvalidInput("sgd_step: empty batch");
  if (lr < 0) throw InvalidInput("sgd_step: negative learning rate");
  Vec g = model.batch_loss_gradient(params, batch);
  return params - lr * g;
}

Vec ogd_step(const Mlp& model, const Vec& params, const Batch& batch, OgdState& state,
             double lr) {
  if (batch.size() == 0) throw InvalidInput("ogd_step: empty batch");
  if (lr < 0) throw InvalidInput("ogd_step: negative learning rate");
  Vec g = model.batch_loss_gradient(params, batch);
  state.project_out(g);
  return params - lr * g;
}

Vec ewc_step(const Mlp& model, const Vec& params, const Batch& batch, const EwcState& state,
             double lr) {
  if (batch.size() == 0) throw InvalidInput("ewc_step: empty batch");
  Vec g = model.batch_loss_gradient(params, batch);
  if (state.lambda != 0.0) {
    for (const auto& anchor : state.anchors) {
      g.noalias() +=
          state.lambda * anchor.fisher.cwiseProduct(params - anchor.params);
    }
  }
  return params - lr * g;
}

Vec agem_step(const Mlp& model, const Vec& params, const Batch& batch,
              const EpisodicMemory& memory, double lr, Rng& sample_rng) {
  if (batch.size() == 0) throw InvalidInput("agem_step: empty batch");
  Vec g = model.batch_loss_gradient(params, batch);
  if (memory.size() > 0) {
    Batch ref;
    if (memory.ref_batch_size > 0 && memory.ref_batch_size < memory.size()) {
      std::vector<int> rows = sample_rng.sample_indices(memory.size(), memory.ref_batch_size);
      ref.inputs.resize(static_cast<int>(rows.size()), memory.inputs.cols());
      ref.labels.resize(static_cast<int>(rows.size()));
      ref.heads.resize(static_cast<int>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        ref.inputs.row(static_cast<int>(i)) = memory.inputs.row(rows[i]);
        ref.labels[static_cast<int>(i)] = memory.labels[rows[i]];
        ref.heads[static_cast<int>(i)] = memory.heads[rows[i]];
      }
    } else {
      ref.inputs = memory.inputs.topRows(memory.size());
      ref.labels = Eigen::Map<const Eigen::VectorXi>(memory.labels.data(), memory.size());
      ref.heads = Eigen::Map<const Eigen::VectorXi>(memory.heads.data(), memory.size());
    }
    Vec g_ref = model.batch_loss_gradient(params, ref);
    const double align = g.dot(g_ref);
    if (align < 0.0) {
      const double denom = g_ref.squaredNorm();
      // align < 0 implies g_ref != 0, so denom > 0
      g.noalias() -= (align / denom) * g_ref;
    }
  }
  return params - lr * g;
}

Batch gather_batch(const TaskDataset& task, const std::vector<int>& rows) {
  Batch batch;
  batch.inputs.resize(static_cast<int>(rows.size()), task.train.images.cols());
  batch.labels.resize(static_cast<int>(rows.size()));
  batch.heads.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    batch.inputs.row(static_cast<int>(i)) = task.train.images.row(rows[i]);
    batch.labels[static_cast<int>(i)] = task.label_map.at(task.train.labels[rows[i]]);
    batch.heads[static_cast<int>(i)] = task.head;
  }
  return batch;
}

void ogd_end_task(const Mlp& model, const Vec& params, const TaskDataset& task,
                  OgdState& state, Rng& rng) {
  const int want = std::min(state.config.budget_per_task, task.train.size());
  if (want <= 0) return;
  const std::vector<int> picks = rng.sample_indices(task.train.size(), want);
  const int c = model.config().logits_per_head;

  auto add_candidate = [&model, &state, &params](const ForwardTrace& trace, const Vec& cotangent) {
    GradientFactors f = model.backward_factored(params, trace, cotangent);
    Vec dense = model.materialize(f);
    OrthoBasis::AddResult res = state.basis.add(dense);
    if (res.accepted) {
      state.fast.add(f, res.coeffs, res.residual_norm, dense.norm());
    }
  };

  for (int row : picks) {
    Vec x = task.train.images.row(row).transpose();
    auto [logits, trace] = model.forward(params, x, task.head);
    switch (state.config.variant) {
      case OgdVariant::kGtl: {
        Vec cot = Vec::Zero(c);
        cot[task.label_map.at(task.train.labels[row])] = 1.0;
        add_candidate(trace, cot);
        break;
      }
      case OgdVariant::kAve: {
        add_candidate(trace, Vec::Constant(c, 1.0 / c));
        break;
      }
      case OgdVariant::kAll: {
        for (int j = 0; j < c; ++j) {
          Vec cot = Vec::Zero(c);
          cot[j] = 1.0;
          add_candidate(trace, cot);
        }
        break;
      }
    }
  }
}

void agem_end_task(EpisodicMemory& memory, const TaskDataset& task, Rng& rng) {
  const int want = std::min(memory.capacity_per_task, task.train.size());
  if (want <= 0) return;
  const std::vector<int> picks = rng.sample_indices(task.train.size(), want);
  const int old = memory.size();
  RowMat grown(old + want, task.train.images.cols());
  if (old > 0) grown.topRows(old) = memory.inputs.topRows(old);
  memory.inputs.swap(grown);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    memory.inputs.row(old + static_cast<int>(i)) = task.train.images.row(picks[i]);
    memory.labels.push_back(task.label_map.at(task.train.labels[picks[i]]));
    memory.heads.push_back(task.head);
    memory.task_ids.push_back(task.task_id);
  }
}

Vec ewc_fisher(const Mlp& model, const Vec& params, const TaskDataset& task, int sample_count,
               Rng& rng) {
  if (sample_count > task.train.size()) {
    throw InvalidInput("ewc_fisher: sample_count exceeds task size");
  }
  const std::vector<int> picks = rng.sample_indices(task.train.size(), sample_count);
  Vec fisher = Vec::Zero(model.param_count());
  for (int row : picks) {
    Vec g = model.loss_gradient(params, task.train.images.row(row).transpose(),
                                task.label_map.at(task.train.labels[row]), task.head);
    fisher.array() += g.array().square();
  }
  if (!picks.empty()) fisher /= static_cast<double>(picks.size());
  return fisher;
}

}  // namespace ogdbench
