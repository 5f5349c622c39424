#include "ogdbench/basis.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "ogdbench/errors.hpp"
#include "ogdbench/rng.hpp"
#include "oracles.hpp"

using namespace ogdbench;

namespace {

Vec random_vec(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("basis_add: first candidate is normalized") {
  OrthoBasis basis(3);
  Vec c(3);
  c << 3.0, 4.0, 0.0;
  auto res = basis.add(c);
  CHECK(res.accepted);
  CHECK(res.residual_norm == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(basis.vector(0)[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(basis.vector(0)[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(basis.vector(0)[2] == 0.0);
}

TEST_CASE("basis_add: hand Gram-Schmidt against e1") {
  OrthoBasis basis(3);
  Vec e1 = Vec::Zero(3);
  e1[0] = 1.0;
  REQUIRE(basis.add(e1).accepted);
  Vec c(3);
  c << 1.0, 1.0, 0.0;
  auto res = basis.add(c);
  CHECK(res.accepted);
  CHECK(res.coeffs.size() == 1);
  CHECK(res.coeffs[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(basis.vector(1)[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(basis.vector(1)[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(basis.vector(1)[2] == 0.0);

  // cross-check against the dense QR oracle: projecting a probe out of the
  // stored span must match the null-space projector of the raw candidates
  Eigen::MatrixXd u(3, 2);
  u.col(0) = e1;
  u.col(1) = c;
  Rng rng(5);
  Vec probe = random_vec(rng, 3);
  Vec via_basis = basis.projected(probe);
  Vec via_oracle = oracles::nullspace_projection(u, probe);
  CHECK((via_basis - via_oracle).norm() < 1e-12);
}

TEST_CASE("basis_add: linearly dependent candidate rejected") {
  OrthoBasis basis(3);
  Vec e1 = Vec::Zero(3);
  e1[0] = 1.0;
  REQUIRE(basis.add(e1).accepted);
  Vec c = Vec::Zero(3);
  c[0] = 5.0;
  CHECK_FALSE(basis.add(c).accepted);
  CHECK(basis.size() == 1);
  CHECK_FALSE(basis.add(Vec::Zero(3)).accepted);
  CHECK_THROWS_AS(basis.add(Vec::Zero(4)), InvalidInput);
}

TEST_CASE("orthogonality invariant under random candidate streams") {
  Rng rng(17);
  for (int dim : {37, 200}) {
    OrthoBasis basis(dim);
    const int adds = dim / 2 + 3;  // force a few rejections via dependents
    for (int i = 0; i < adds; ++i) {
      Vec c = random_vec(rng, dim);
      if (i % 7 == 3 && basis.size() > 0) c = 2.5 * Vec(basis.vector(0));  // dependent
      basis.add(c);
    }
    double max_dot = 0, max_norm_err = 0;
    for (int i = 0; i < basis.size(); ++i) {
      max_norm_err = std::max(max_norm_err, std::abs(basis.vector(i).norm() - 1.0));
      for (int j = i + 1; j < basis.size(); ++j) {
        max_dot = std::max(max_dot, std::abs(basis.vector(i).dot(basis.vector(j))));
      }
    }
    CHECK(max_dot < 1e-6);
    CHECK(max_norm_err < 1e-9);
  }
}

TEST_CASE("project_orthogonal: coordinate projection and empty-basis no-op") {
  OrthoBasis basis(2);
  Vec g(2);
  g << 3.0, 4.0;
  CHECK(basis.projected(g) == g);  // empty basis: exact identity

  Vec e1 = Vec::Zero(2);
  e1[0] = 1.0;
  basis.add(e1);
  Vec out = basis.projected(g);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 4.0);
  CHECK_THROWS_AS(basis.projected(Vec::Zero(3)), InvalidInput);
}

TEST_CASE("projection idempotence and descent identity") {
  Rng rng(23);
  const int dim = 150;
  OrthoBasis basis(dim);
  for (int i = 0; i < 40; ++i) basis.add(random_vec(rng, dim));
  for (int trial = 0; trial < 25; ++trial) {
    Vec g = random_vec(rng, dim);
    Vec once = basis.projected(g);
    Vec twice = basis.projected(once);
    CHECK((twice - once).norm() <= 1e-9 * g.norm());
    // Lemma-style identity: <g~, g> = ||g~||^2
    CHECK(std::abs(once.dot(g) - once.squaredNorm()) <= 1e-9 * g.squaredNorm());
  }
}

TEST_CASE("span preservation: vectors inside the span project to ~zero") {
  Rng rng(29);
  const int dim = 80;
  OrthoBasis basis(dim);
  std::vector<Vec> accepted;
  for (int i = 0; i < 25; ++i) {
    Vec c = random_vec(rng, dim);
    if (basis.add(c).accepted) accepted.push_back(c);
  }
  for (int trial = 0; trial < 10; ++trial) {
    Vec combo = Vec::Zero(dim);
    for (const auto& u : accepted) combo += rng.uniform(-2, 2) * u;
    Vec out = basis.projected(combo);
    CHECK(out.norm() <= 1e-6 * combo.norm());
  }
}

TEST_CASE("projection matches dense null-space oracle on random instances") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 20 + static_cast<int>(rng.below(180));
    const int n_cand = 1 + static_cast<int>(rng.below(dim / 2));
    OrthoBasis basis(dim);
    Eigen::MatrixXd u(dim, n_cand);
    int accepted = 0;
    for (int i = 0; i < n_cand; ++i) {
      Vec c = random_vec(rng, dim);
      if (basis.add(c).accepted) u.col(accepted++) = c;
    }
    Vec g = random_vec(rng, dim);
    Vec mine = basis.projected(g);
    Vec oracle = oracles::nullspace_projection(u.leftCols(accepted), g);
    CHECK((mine - oracle).norm() <= 1e-8 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(37);
  OrthoBasis basis(64);
  for (int i = 0; i < 12; ++i) basis.add(random_vec(rng, 64));
  const auto path = std::filesystem::temp_directory_path() / "ogdb_basis.bin";
  basis.save(path.string());
  OrthoBasis loaded = OrthoBasis::load(path.string());
  REQUIRE(loaded.size() == basis.size());
  REQUIRE(loaded.dim() == basis.dim());
  for (int i = 0; i < basis.size(); ++i) {
    CHECK(Vec(loaded.vector(i)) == Vec(basis.vector(i)));
  }
  // corrupt: truncate the payload
  {
    std::FILE* f = std::fopen(path.c_str(), "rb+");
    REQUIRE(f);
    std::fclose(f);
    std::filesystem::resize_file(path, 16 + 100);
    CHECK_THROWS_AS(OrthoBasis::load(path.string()), FormatError);
  }
}

// --- FastProjector ----------------------------------------------------------

namespace {

Mlp projector_net() {
  ModelConfig cfg;
  cfg.input_dim = 12;
  cfg.hidden_dims = {10, 9};
  cfg.logits_per_head = 3;
  cfg.num_heads = 2;
  return Mlp(cfg);
}

// Builds a basis from genuine logit gradients, mirrored into a
// FastProjector, exactly like the training loop does.
struct MirroredBasis {
  MirroredBasis(const Mlp& mlp, int n_candidates, std::uint64_t seed)
      : basis(mlp.param_count()), fast(mlp) {
    Rng rng(seed);
    const Vec params = mlp.init_params(seed + 1);
    for (int i = 0; i < n_candidates; ++i) {
      Vec x = random_vec(rng, mlp.config().input_dim, 0.0, 1.0);
      const int head = static_cast<int>(rng.below(mlp.config().num_heads));
      auto [logits, trace] = mlp.forward(params, x, head);
      Vec cot = Vec::Zero(mlp.config().logits_per_head);
      cot[rng.below(mlp.config().logits_per_head)] = 1.0;
      GradientFactors f = mlp.backward_factored(params, trace, cot);
      Vec dense = mlp.materialize(f);
      auto res = basis.add(dense);
      if (res.accepted) fast.add(f, res.coeffs, res.residual_norm, dense.norm());
    }
  }
  OrthoBasis basis;
  FastProjector fast;
};

}  // namespace

TEST_CASE("fast projector agrees with the dense basis projection") {
  const Mlp mlp = projector_net();
  MirroredBasis mirror(mlp, 30, 4242);
  REQUIRE(mirror.fast.usable());
  REQUIRE(mirror.fast.size() == mirror.basis.size());
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    Vec g = random_vec(rng, mlp.param_count());
    Vec dense = mirror.basis.projected(g);
    Vec fast = g;
    mirror.fast.apply(fast);
    CHECK((fast - dense).norm() <= 1e-8 * g.norm());
    // the fast path must satisfy the same orthogonality post-condition
    for (int i = 0; i < mirror.basis.size(); ++i) {
      CHECK(std::abs(mirror.basis.vector(i).dot(fast)) <= 1e-6 * g.norm());
    }
  }
}

TEST_CASE("fast projector with empty state is an exact no-op") {
  const Mlp mlp = projector_net();
  FastProjector fast(mlp);
  CHECK(fast.usable());
  Rng rng(60);
  Vec g = random_vec(rng, mlp.param_count());
  Vec before = g;
  fast.apply(g);
  CHECK(g == before);
}
