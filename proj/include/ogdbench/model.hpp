#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ogdbench {

using Vec = Eigen::VectorXd;
// Row-major so one example (one matrix row) is contiguous in memory.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fully-connected ReLU network: a shared trunk of hidden layers plus one
// affine output layer ("head") per task group. All parameters live in a
// single flat vector of length param_count(); that flat vector is the
// coordinate system for every piece of gradient algebra downstream.
struct ModelConfig {
  int input_dim = 784;
  std::vector<int> hidden_dims = {100, 100};
  int logits_per_head = 10;
  int num_heads = 1;

  void validate() const;
};

// Post-activation values cached by forward() for the backward pass.
// activations[0] is the input; activations.back() feeds the head.
struct ForwardTrace {
  std::vector<Vec> activations;
  Vec logits;
  int head = 0;
};

// A logit-combination gradient in factored (backprop outer-product) form:
// the dense gradient block for trunk layer l is deltas[l] * activations[l]^T
// and the head block is head_delta * activations.back()^T. Storing the
// factors instead of the dense vector is what keeps large projection bases
// affordable; materialize() recovers the dense form exactly.
struct GradientFactors {
  std::vector<Vec> activations;  // a_0 .. a_L, as in ForwardTrace
  std::vector<Vec> deltas;       // masked delta per trunk layer
  Vec head_delta;                // cotangent reaching the head layer
  int head = 0;
};

// One minibatch, already gathered into a dense row-per-example matrix.
// Labels are head-local; heads may be mixed (multi-task sampling).
struct Batch {
  RowMat inputs;
  Eigen::VectorXi labels;
  Eigen::VectorXi heads;

  int size() const { return static_cast<int>(inputs.rows()); }
};

Vec softmax(const Vec& logits);
double ce_loss(const Vec& logits, int label);
double ce_loss(const Vec& logits, const Vec& one_hot);

class Mlp {
 public:
  explicit Mlp(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  int param_count() const { return param_count_; }
  int num_trunk_layers() const { return static_cast<int>(config_.hidden_dims.size()); }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases,
  // fully determined by the seed.
  Vec init_params(std::uint64_t seed) const;

  std::pair<Vec, ForwardTrace> forward(const Vec& params, const Vec& x, int head) const;

  // Gradient of <cotangent, logits> w.r.t. the flat parameters. Slots of
  // non-selected heads are exactly zero.
  Vec backward(const Vec& params, const ForwardTrace& trace, const Vec& cotangent) const;

  // Same contraction but returned in factored form.
  GradientFactors backward_factored(const Vec& params, const ForwardTrace& trace,
                                    const Vec& cotangent) const;
  Vec materialize(const GradientFactors& f) const;

  // Gradient of the softmax cross-entropy loss at one example.
  Vec loss_gradient(const Vec& params, const Vec& x, int label, int head) const;

  // Mean loss gradient over a batch; GEMM path, identical result to
  // averaging loss_gradient per example up to summation rounding.
  Vec batch_loss_gradient(const Vec& params, const Batch& batch) const;

  // Logits for many examples of one head at once (evaluation path).
  RowMat batch_logits(const Vec& params, const RowMat& inputs, int head) const;

  // Flat-vector layout.
  int trunk_weight_offset(int layer) const { return trunk_off_[layer]; }
  int trunk_bias_offset(int layer) const;
  int head_weight_offset(int head) const;
  int head_bias_offset(int head) const;
  int head_params_begin() const { return head_off_[0]; }
  int layer_in_dim(int layer) const { return dims_[layer]; }
  int layer_out_dim(int layer) const { return dims_[layer + 1]; }

 private:
  void check_params(const Vec& params) const;

  ModelConfig config_;
  std::vector<int> dims_;       // input_dim, hidden..., (head input = dims_.back())
  std::vector<int> trunk_off_;  // weight offset per trunk layer (bias follows)
  std::vector<int> head_off_;   // weight offset per head (bias follows)
  int param_count_ = 0;
};

}  // namespace ogdbench
