#include "ogdbench/basis.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <memory>

#include "ogdbench/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "basis checkpoint I/O assumes a little-endian host");

namespace ogdbench {

namespace {

double dot(const double* __restrict a, const double* __restrict b, int n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double* __restrict y, double alpha, const double* __restrict x, int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

OrthoBasis::OrthoBasis(int dim, double drop_tol) : dim_(dim), drop_tol_(drop_tol) {
  if (dim < 1) throw InvalidInput("OrthoBasis: dim must be >= 1");
  if (drop_tol <= 0) throw InvalidInput("OrthoBasis: drop_tol must be > 0");
}

void OrthoBasis::ensure_capacity(int count) {
  if (count <= capacity_) return;
  int new_cap = capacity_ == 0 ? 16 : capacity_;
  while (new_cap < count) new_cap *= 2;
  storage_.resize(static_cast<std::size_t>(new_cap) * dim_);
  capacity_ = new_cap;
}

OrthoBasis::AddResult OrthoBasis::add(const Vec& candidate) {
  if (candidate.size() != dim_) throw InvalidInput("OrthoBasis::add: length mismatch");
  const double cand_norm = candidate.norm();
  AddResult result;
  result.coeffs = Vec::Zero(count_);
  if (cand_norm == 0.0) return result;

  Vec r = candidate;
  // modified Gram-Schmidt, then one re-orthogonalization pass
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < count_; ++i) {
      const double c = dot(column(i), r.data(), dim_);
      axpy(r.data(), -c, column(i), dim_);
      result.coeffs[i] += c;
    }
  }
  const double rn = r.norm();
  if (rn < drop_tol_ * cand_norm) return result;

  ensure_capacity(count_ + 1);
  Eigen::Map<Vec>(column(count_), dim_) = r / rn;
  ++count_;
  result.accepted = true;
  result.residual_norm = rn;
  return result;
}

void OrthoBasis::project_out(Vec& g) const {
  if (g.size() != dim_) throw InvalidInput("OrthoBasis::project_out: length mismatch");
  if (count_ == 0) return;
  const double g_norm = g.norm();
  Vec coeffs(count_);
  for (int i = 0; i < count_; ++i) coeffs[i] = dot(column(i), g.data(), dim_);
  for (int i = 0; i < count_; ++i) axpy(g.data(), -coeffs[i], column(i), dim_);

  // residual check; one more pass if the first left leakage above tolerance
  double max_residual = 0.0;
  for (int i = 0; i < count_; ++i) {
    coeffs[i] = dot(column(i), g.data(), dim_);
    max_residual = std::max(max_residual, std::abs(coeffs[i]));
  }
  if (max_residual > kResidualTol * g_norm) {
    for (int i = 0; i < count_; ++i) axpy(g.data(), -coeffs[i], column(i), dim_);
  }
}

Vec OrthoBasis::projected(const Vec& g) const {
  Vec out = g;
  project_out(out);
  return out;
}

Eigen::Map<const Vec> OrthoBasis::vector(int i) const {
  if (i < 0 || i >= count_) throw InvalidInput("OrthoBasis::vector: index out of range");
  return Eigen::Map<const Vec>(column(i), dim_);
}

void OrthoBasis::save(const std::string& path) const {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "wb"),
                                                    &std::fclose);
  if (!f) throw FormatError(path, "cannot open for writing");
  const std::uint64_t header[2] = {static_cast<std::uint64_t>(dim_),
                                   static_cast<std::uint64_t>(count_)};
  if (std::fwrite(header, sizeof header, 1, f.get()) != 1) {
    throw FormatError(path, "write failed");
  }
  const std::size_t n = static_cast<std::size_t>(count_) * dim_;
  if (n > 0 && std::fwrite(storage_.data(), sizeof(double), n, f.get()) != n) {
    throw FormatError(path, "write failed");
  }
}

OrthoBasis OrthoBasis::load(const std::string& path, double drop_tol) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"),
                                                    &std::fclose);
  if (!f) throw FormatError(path, "cannot open");
  std::uint64_t header[2];
  if (std::fread(header, sizeof header, 1, f.get()) != 1) {
    throw FormatError(path, "truncated header");
  }
  if (header[0] == 0 || header[0] > (1ull << 32) || header[1] > (1ull << 32)) {
    throw FormatError(path, "implausible dimensions in header");
  }
  OrthoBasis basis(static_cast<int>(header[0]), drop_tol);
  basis.ensure_capacity(static_cast<int>(header[1]));
  const std::size_t n = static_cast<std::size_t>(header[0]) * header[1];
  if (n > 0 && std::fread(basis.storage_.data(), sizeof(double), n, f.get()) != n) {
    throw FormatError(path, "truncated payload");
  }
  basis.count_ = static_cast<int>(header[1]);
  for (int i = 0; i < basis.count_; ++i) {
    const double norm = basis.vector(i).norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
      throw FormatError(path, "stored vector " + std::to_string(i) + " is not unit length");
    }
  }
  return basis;
}

// ---------------------------------------------------------------------------

FastProjector::FastProjector(const Mlp& model) : model_(&model) {
  const int L = model.num_trunk_layers();
  acts_.resize(L);
  deltas_.resize(L);
  heads_.resize(model.config().num_heads);
}

void FastProjector::append_row(RowMat& m, int& rows, const Vec& v) {
  if (rows == m.rows()) {
    RowMat grown(std::max<Eigen::Index>(16, m.rows() * 2), v.size());
    grown.topRows(m.rows()) = m;
    m.swap(grown);
  }
  m.row(rows++) = v.transpose();
}

void FastProjector::add(const GradientFactors& factors, const Vec& coeffs,
                        double residual_norm, double candidate_norm) {
  if (!usable_) return;
  const int L = model_->num_trunk_layers();
  if (static_cast<int>(factors.deltas.size()) != L || coeffs.size() != count_ ||
      residual_norm <= 0.0) {
    usable_ = false;
    return;
  }
  for (int l = 0; l < L; ++l) {
    int r = count_;
    append_row(acts_[l], r, factors.activations[l]);
    r = count_;
    append_row(deltas_[l], r, factors.deltas[l]);
  }
  HeadGroup& grp = heads_[factors.head];
  int r = grp.rows;
  append_row(grp.a_in, r, factors.activations.back());
  append_row(grp.delta, grp.rows, factors.head_delta);
  grp.members.push_back(count_);

  if (tri_.rows() <= count_) {
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(16, tri_.rows() * 2),
                                                  std::max<Eigen::Index>(16, tri_.rows() * 2));
    grown.topLeftCorner(tri_.rows(), tri_.cols()) = tri_;
    tri_.swap(grown);
  }
  tri_.row(count_).head(count_) = coeffs.transpose();
  tri_(count_, count_) = residual_norm;

  min_residual_ = std::min(min_residual_, residual_norm);
  max_norm_ = std::max(max_norm_, candidate_norm);
  ++count_;
}

bool FastProjector::usable() const {
  if (!usable_) return false;
  if (count_ == 0) return true;
  // triangular solves amplify error by roughly the condition of T; stay well
  // inside the projection tolerance with double precision
  return max_norm_ < 1e9 * min_residual_;
}

void FastProjector::apply(Vec& g) {
  if (!usable()) throw InvalidState("FastProjector::apply on unusable projector");
  if (count_ == 0) return;
  const Mlp& m = *model_;
  if (g.size() != m.param_count()) throw InvalidInput("FastProjector::apply: length mismatch");
  const int L = m.num_trunk_layers();
  const int n = count_;

  z_.setZero(n);
  // z = U g, contracted layer by layer
  for (int l = 0; l < L; ++l) {
    const auto a = acts_[l].topRows(n);
    const auto d = deltas_[l].topRows(n);
    Eigen::Map<const RowMat> gw(g.data() + m.trunk_weight_offset(l), m.layer_out_dim(l),
                                m.layer_in_dim(l));
    Eigen::Map<const Vec> gb(g.data() + m.trunk_bias_offset(l), m.layer_out_dim(l));
    z_.noalias() += ((a * gw.transpose()).cwiseProduct(d)).rowwise().sum();
    z_.noalias() += d * gb;
  }
  const int c = m.config().logits_per_head;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const HeadGroup& grp = heads_[h];
    if (grp.rows == 0) continue;
    const auto a = grp.a_in.topRows(grp.rows);
    const auto d = grp.delta.topRows(grp.rows);
    Eigen::Map<const RowMat> gw(g.data() + m.head_weight_offset(static_cast<int>(h)), c,
                                m.layer_in_dim(L));
    Eigen::Map<const Vec> gb(g.data() + m.head_bias_offset(static_cast<int>(h)), c);
    Vec part = ((a * gw.transpose()).cwiseProduct(d)).rowwise().sum();
    part.noalias() += d * gb;
    for (int i = 0; i < grp.rows; ++i) z_[grp.members[i]] += part[i];
  }

  // y = T^-T (T^-1 z)
  y_ = tri_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(z_);
  tri_.topLeftCorner(n, n).triangularView<Eigen::Lower>().transpose().solveInPlace(y_);

  // g -= U^T y
  for (int l = 0; l < L; ++l) {
    const auto a = acts_[l].topRows(n);
    const auto d = deltas_[l].topRows(n);
    Eigen::Map<RowMat> gw(g.data() + m.trunk_weight_offset(l), m.layer_out_dim(l),
                          m.layer_in_dim(l));
    Eigen::Map<Vec> gb(g.data() + m.trunk_bias_offset(l), m.layer_out_dim(l));
    gw.noalias() -= (d.transpose() * y_.asDiagonal()) * a;
    gb.noalias() -= d.transpose() * y_;
  }
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const HeadGroup& grp = heads_[h];
    if (grp.rows == 0) continue;
    Vec yh(grp.rows);
    for (int i = 0; i < grp.rows; ++i) yh[i] = y_[grp.members[i]];
    const auto a = grp.a_in.topRows(grp.rows);
    const auto d = grp.delta.topRows(grp.rows);
    Eigen::Map<RowMat> gw(g.data() + m.head_weight_offset(static_cast<int>(h)), c,
                          m.layer_in_dim(L));
    Eigen::Map<Vec> gb(g.data() + m.head_bias_offset(static_cast<int>(h)), c);
    gw.noalias() -= (d.transpose() * yh.asDiagonal()) * a;
    gb.noalias() -= d.transpose() * yh;
  }
}

}  // namespace ogdbench
