#include "ogdbench/model.hpp"

#include <cmath>
#include <string>

#include "ogdbench/errors.hpp"
#include "ogdbench/rng.hpp"

namespace ogdbench {

namespace {

using ConstMapRowMat = Eigen::Map<const RowMat>;
using MapRowMat = Eigen::Map<RowMat>;
using ConstMapVec = Eigen::Map<const Vec>;
using MapVec = Eigen::Map<Vec>;

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1) throw InvalidInput("ModelConfig: input_dim must be >= 1");
  if (logits_per_head < 1) throw InvalidInput("ModelConfig: logits_per_head must be >= 1");
  if (num_heads < 1) throw InvalidInput("ModelConfig: num_heads must be >= 1");
  for (int h : hidden_dims) {
    if (h < 1) throw InvalidInput("ModelConfig: hidden dims must be >= 1");
  }
}

Vec softmax(const Vec& logits) {
  if (!logits.allFinite()) throw InvalidInput("softmax: non-finite logit");
  const double shift = logits.maxCoeff();
  Vec e = (logits.array() - shift).exp();
  return e / e.sum();
}

double ce_loss(const Vec& logits, int label) {
  if (label < 0 || label >= logits.size()) throw InvalidInput("ce_loss: label out of range");
  const double shift = logits.maxCoeff();
  const double lse = shift + std::log((logits.array() - shift).exp().sum());
  return lse - logits[label];
}

double ce_loss(const Vec& logits, const Vec& one_hot) {
  if (one_hot.size() != logits.size()) throw InvalidInput("ce_loss: label size mismatch");
  int label = -1;
  for (int i = 0; i < one_hot.size(); ++i) {
    if (one_hot[i] == 1.0) {
      if (label >= 0) throw InvalidInput("ce_loss: label vector not one-hot");
      label = i;
    } else if (one_hot[i] != 0.0) {
      throw InvalidInput("ce_loss: label vector not one-hot");
    }
  }
  if (label < 0) throw InvalidInput("ce_loss: label vector not one-hot");
  return ce_loss(logits, label);
}

Mlp::Mlp(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  dims_.push_back(config_.input_dim);
  for (int h : config_.hidden_dims) dims_.push_back(h);

  int off = 0;
  for (int l = 0; l < num_trunk_layers(); ++l) {
    trunk_off_.push_back(off);
    off += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  const int head_in = dims_.back();
  for (int h = 0; h < config_.num_heads; ++h) {
    head_off_.push_back(off);
    off += config_.logits_per_head * head_in + config_.logits_per_head;
  }
  param_count_ = off;
}

int Mlp::trunk_bias_offset(int layer) const {
  return trunk_off_[layer] + dims_[layer + 1] * dims_[layer];
}

int Mlp::head_weight_offset(int head) const { return head_off_[head]; }

int Mlp::head_bias_offset(int head) const {
  return head_off_[head] + config_.logits_per_head * dims_.back();
}

void Mlp::check_params(const Vec& params) const {
  if (params.size() != param_count_) {
    throw InvalidInput("parameter vector has length " + std::to_string(params.size()) +
                       ", model expects " + std::to_string(param_count_));
  }
}

Vec Mlp::init_params(std::uint64_t seed) const {
  Rng rng(seed);
  Vec params = Vec::Zero(param_count_);
  auto fill = [&rng, &params](int w_off, int rows, int cols) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows * cols; ++i) {
      params[w_off + i] = rng.uniform(-scale, scale);
    }
    // bias entries stay zero
  };
  for (int l = 0; l < num_trunk_layers(); ++l) fill(trunk_off_[l], dims_[l + 1], dims_[l]);
  for (int h = 0; h < config_.num_heads; ++h) {
    fill(head_off_[h], config_.logits_per_head, dims_.back());
  }
  return params;
}

std::pair<Vec, ForwardTrace> Mlp::forward(const Vec& params, const Vec& x, int head) const {
  check_params(params);
  if (x.size() != config_.input_dim) {
    throw InvalidInput("forward: input has length " + std::to_string(x.size()) +
                       ", model expects " + std::to_string(config_.input_dim));
  }
  if (head < 0 || head >= config_.num_heads) throw InvalidInput("forward: head out of range");

  ForwardTrace trace;
  trace.head = head;
  trace.activations.reserve(num_trunk_layers() + 1);
  trace.activations.push_back(x);
  for (int l = 0; l < num_trunk_layers(); ++l) {
    ConstMapRowMat w(params.data() + trunk_off_[l], dims_[l + 1], dims_[l]);
    ConstMapVec b(params.data() + trunk_bias_offset(l), dims_[l + 1]);
    Vec z = w * trace.activations.back() + b;
    trace.activations.push_back(z.cwiseMax(0.0));
  }
  const int c = config_.logits_per_head;
  ConstMapRowMat wh(params.data() + head_off_[head], c, dims_.back());
  ConstMapVec bh(params.data() + head_bias_offset(head), c);
  trace.logits = wh * trace.activations.back() + bh;
  return {trace.logits, std::move(trace)};
}

Vec Mlp::backward(const Vec& params, const ForwardTrace& trace, const Vec& cotangent) const {
  return materialize(backward_factored(params, trace, cotangent));
}

GradientFactors Mlp::backward_factored(const Vec& params, const ForwardTrace& trace,
                                       const Vec& cotangent) const {
  check_params(params);
  if (static_cast<int>(trace.activations.size()) != num_trunk_layers() + 1 ||
      trace.head < 0 || trace.head >= config_.num_heads) {
    throw InvalidState("backward: trace does not match model");
  }
  for (int l = 0; l <= num_trunk_layers(); ++l) {
    if (trace.activations[l].size() != dims_[l]) {
      throw InvalidState("backward: trace activation shape mismatch");
    }
  }
  if (cotangent.size() != config_.logits_per_head) {
    throw InvalidInput("backward: cotangent length must equal logits_per_head");
  }

  GradientFactors f;
  f.head = trace.head;
  f.activations = trace.activations;
  f.head_delta = cotangent;
  f.deltas.resize(num_trunk_layers());

  const int c = config_.logits_per_head;
  ConstMapRowMat wh(params.data() + head_off_[trace.head], c, dims_.back());
  Vec delta = wh.transpose() * cotangent;
  for (int l = num_trunk_layers() - 1; l >= 0; --l) {
    // ReLU subgradient at 0 is 0: mask by post-activation > 0.
    delta = (trace.activations[l + 1].array() > 0.0).select(delta, 0.0);
    f.deltas[l] = delta;
    if (l > 0) {
      ConstMapRowMat w(params.data() + trunk_off_[l], dims_[l + 1], dims_[l]);
      delta = w.transpose() * delta;
    }
  }
  return f;
}

Vec Mlp::materialize(const GradientFactors& f) const {
  Vec g = Vec::Zero(param_count_);
  for (int l = 0; l < num_trunk_layers(); ++l) {
    MapRowMat gw(g.data() + trunk_off_[l], dims_[l + 1], dims_[l]);
    gw.noalias() = f.deltas[l] * f.activations[l].transpose();
    MapVec gb(g.data() + trunk_bias_offset(l), dims_[l + 1]);
    gb = f.deltas[l];
  }
  const int c = config_.logits_per_head;
  MapRowMat gwh(g.data() + head_off_[f.head], c, dims_.back());
  gwh.noalias() = f.head_delta * f.activations.back().transpose();
  MapVec gbh(g.data() + head_bias_offset(f.head), c);
  gbh = f.head_delta;
  return g;
}

Vec Mlp::loss_gradient(const Vec& params, const Vec& x, int label, int head) const {
  auto [logits, trace] = forward(params, x, head);
  if (label < 0 || label >= config_.logits_per_head) {
    throw InvalidInput("loss_gradient: label out of range");
  }
  Vec cot = softmax(logits);
  cot[label] -= 1.0;
  return backward(params, trace, cot);
}

Vec Mlp::batch_loss_gradient(const Vec& params, const Batch& batch) const {
  check_params(params);
  const int n = batch.size();
  if (n == 0) throw InvalidInput("batch_loss_gradient: empty batch");
  if (batch.inputs.cols() != config_.input_dim ||
      batch.labels.size() != n || batch.heads.size() != n) {
    throw InvalidInput("batch_loss_gradient: batch shape mismatch");
  }
  for (int i = 0; i < n; ++i) {
    if (batch.heads[i] < 0 || batch.heads[i] >= config_.num_heads) {
      throw InvalidInput("batch_loss_gradient: head out of range");
    }
  }
  const int c = config_.logits_per_head;
  const int L = num_trunk_layers();

  // Trunk forward for the whole batch.
  std::vector<RowMat> acts(L + 1);
  acts[0] = batch.inputs;
  for (int l = 0; l < L; ++l) {
    ConstMapRowMat w(params.data() + trunk_off_[l], dims_[l + 1], dims_[l]);
    ConstMapVec b(params.data() + trunk_bias_offset(l), dims_[l + 1]);
    acts[l + 1] = ((acts[l] * w.transpose()).rowwise() + b.transpose()).cwiseMax(0.0);
  }

  Vec g = Vec::Zero(param_count_);
  RowMat delta(n, dims_.back());  // dL/d(head input), filled per head group

  const double inv_n = 1.0 / n;
  for (int h = 0; h < config_.num_heads; ++h) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
      if (batch.heads[i] == h) rows.push_back(i);
    }
    if (rows.empty()) continue;
    const int m = static_cast<int>(rows.size());
    RowMat ain(m, dims_.back());
    for (int i = 0; i < m; ++i) ain.row(i) = acts[L].row(rows[i]);

    ConstMapRowMat wh(params.data() + head_off_[h], c, dims_.back());
    ConstMapVec bh(params.data() + head_bias_offset(h), c);
    RowMat logits = (ain * wh.transpose()).rowwise() + bh.transpose();

    // softmax cross-entropy cotangent, scaled so the sum is the batch mean
    RowMat cot(m, c);
    for (int i = 0; i < m; ++i) {
      const double shift = logits.row(i).maxCoeff();
      Eigen::RowVectorXd e = (logits.row(i).array() - shift).exp();
      cot.row(i) = e / e.sum();
      const int label = batch.labels[rows[i]];
      if (label < 0 || label >= c) throw InvalidInput("batch_loss_gradient: label out of range");
      cot(i, label) -= 1.0;
      cot.row(i) *= inv_n;
    }

    MapRowMat gwh(g.data() + head_off_[h], c, dims_.back());
    gwh.noalias() = cot.transpose() * ain;
    MapVec gbh(g.data() + head_bias_offset(h), c);
    gbh = cot.colwise().sum();

    RowMat dh = cot * wh;
    for (int i = 0; i < m; ++i) delta.row(rows[i]) = dh.row(i);
  }

  for (int l = L - 1; l >= 0; --l) {
    delta = (acts[l + 1].array() > 0.0).select(delta, 0.0);
    MapRowMat gw(g.data() + trunk_off_[l], dims_[l + 1], dims_[l]);
    gw.noalias() = delta.transpose() * acts[l];
    MapVec gb(g.data() + trunk_bias_offset(l), dims_[l + 1]);
    gb = delta.colwise().sum();
    if (l > 0) {
      ConstMapRowMat w(params.data() + trunk_off_[l], dims_[l + 1], dims_[l]);
      delta = (delta * w).eval();
    }
  }
  return g;
}

RowMat Mlp::batch_logits(const Vec& params, const RowMat& inputs, int head) const {
  check_params(params);
  if (inputs.cols() != config_.input_dim) throw InvalidInput("batch_logits: input dim mismatch");
  if (head < 0 || head >= config_.num_heads) throw InvalidInput("batch_logits: head out of range");
  RowMat a = inputs;
  for (int l = 0; l < num_trunk_layers(); ++l) {
    ConstMapRowMat w(params.data() + trunk_off_[l], dims_[l + 1], dims_[l]);
    ConstMapVec b(params.data() + trunk_bias_offset(l), dims_[l + 1]);
    a = ((a * w.transpose()).rowwise() + b.transpose()).cwiseMax(0.0);
  }
  ConstMapRowMat wh(params.data() + head_off_[head], config_.logits_per_head, dims_.back());
  ConstMapVec bh(params.data() + head_bias_offset(head), config_.logits_per_head);
  return (a * wh.transpose()).rowwise() + bh.transpose();
}

}  // namespace ogdbench
