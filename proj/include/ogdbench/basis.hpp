#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "ogdbench/model.hpp"

namespace ogdbench {

// Orthonormal basis of stored gradient directions, built incrementally by
// modified Gram-Schmidt with one re-orthogonalization pass. Vectors are kept
// normalized; near-dependent candidates (relative residual below drop_tol)
// are discarded.
class OrthoBasis {
 public:
  struct AddResult {
    bool accepted = false;
    // Expansion of the candidate in the pre-existing basis (both passes
    // combined) and the residual norm: candidate = sum coeffs[i]*v_i +
    // residual_norm * v_new. Lets callers maintain factorized mirrors.
    Vec coeffs;
    double residual_norm = 0.0;
  };

  explicit OrthoBasis(int dim, double drop_tol = 1e-8);

  int dim() const { return dim_; }
  int size() const { return count_; }
  double drop_tol() const { return drop_tol_; }

  AddResult add(const Vec& candidate);

  // g <- g minus its projection onto span(basis). A second subtraction pass
  // runs when the first leaves any |<g~, v_i>| above kResidualTol * ||g||.
  void project_out(Vec& g) const;
  Vec projected(const Vec& g) const;

  Eigen::Map<const Vec> vector(int i) const;

  // Binary checkpoint: u64 dim, u64 count, then count*dim doubles
  // (vectors back to back), all little-endian.
  void save(const std::string& path) const;
  static OrthoBasis load(const std::string& path, double drop_tol = 1e-8);

  static constexpr double kResidualTol = 1e-6;

 private:
  void ensure_capacity(int count);
  double* column(int i) { return storage_.data() + static_cast<std::size_t>(i) * dim_; }
  const double* column(int i) const {
    return storage_.data() + static_cast<std::size_t>(i) * dim_;
  }

  int dim_;
  double drop_tol_;
  int count_ = 0;
  int capacity_ = 0;
  std::vector<double> storage_;  // column-major, one basis vector per column
};

// Applies the same projection as OrthoBasis::project_out but in the factored
// coordinates of MLP logit gradients: with U the matrix of accepted raw
// candidates and T the (lower triangular) Gram-Schmidt expansion recorded by
// OrthoBasis::add, the basis is V = T^-1 U, so
//   g~ = g - U^T T^-T T^-1 U g.
// U g and U^T y contract against the stored backprop factors (activations
// and deltas), which turns the per-step cost from a memory-bound sweep over
// count*p doubles into small dense GEMMs. Falls back (usable() == false)
// when a candidate arrives without factors or conditioning degrades.
class FastProjector {
 public:
  explicit FastProjector(const Mlp& model);

  // Record an accepted candidate. `coeffs`/`residual_norm` come from the
  // matching OrthoBasis::AddResult, `candidate_norm` from the raw vector.
  void add(const GradientFactors& factors, const Vec& coeffs, double residual_norm,
           double candidate_norm);
  void mark_unusable() { usable_ = false; }

  int size() const { return count_; }
  bool usable() const;

  // g <- g - projection. Requires usable().
  void apply(Vec& g);

 private:
  struct HeadGroup {
    std::vector<int> members;  // global candidate indices
    RowMat a_in;               // head-input activation rows
    RowMat delta;              // head cotangent rows
    int rows = 0;
  };

  static void append_row(RowMat& m, int& rows, const Vec& v);

  const Mlp* model_;
  int count_ = 0;
  bool usable_ = true;
  double min_residual_ = std::numeric_limits<double>::infinity();
  double max_norm_ = 0.0;

  std::vector<RowMat> acts_;    // per trunk layer: input activation rows
  std::vector<RowMat> deltas_;  // per trunk layer: delta rows
  std::vector<HeadGroup> heads_;
  Eigen::MatrixXd tri_;  // lower-triangular T, top-left count_ x count_

  // scratch
  Vec z_, y_;
};

}  // namespace ogdbench
