#include "ogdbench/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ogdbench/basis.hpp"
#include "ogdbench/harness.hpp"
#include "ogdbench/model.hpp"
#include "ogdbench/optimizers.hpp"
#include "ogdbench/rng.hpp"

namespace ogdbench {

namespace {

Vec random_vec(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

Mlp random_small_net(Rng& rng) {
  ModelConfig cfg;
  cfg.input_dim = 4 + static_cast<int>(rng.below(8));
  cfg.hidden_dims = {4 + static_cast<int>(rng.below(12)), 4 + static_cast<int>(rng.below(12))};
  cfg.logits_per_head = 2 + static_cast<int>(rng.below(6));
  cfg.num_heads = 1 + static_cast<int>(rng.below(2));
  return Mlp(cfg);
}

// Central finite difference of the per-example loss along coordinate i.
double fd_loss(const Mlp& mlp, const Vec& params, const Vec& x, int label, int head, int i,
               double step) {
  Vec p = params;
  p[i] += step;
  const double up = ce_loss(mlp.forward(p, x, head).first, label);
  p[i] -= 2 * step;
  const double down = ce_loss(mlp.forward(p, x, head).first, label);
  return (up - down) / (2 * step);
}

PropertyResult check_gradient_fd(std::uint64_t seed) {
  PropertyResult res{"gradient-finite-difference", true, 0.0, {}};
  Rng rng(mix_seed(seed, 11));
  for (int net = 0; net < 10; ++net) {
    const Mlp mlp = random_small_net(rng);
    const Vec params = mlp.init_params(rng.next());
    const Vec x = random_vec(rng, mlp.config().input_dim);
    const int label = static_cast<int>(rng.below(mlp.config().logits_per_head));
    const int head = static_cast<int>(rng.below(mlp.config().num_heads));
    const Vec g = mlp.loss_gradient(params, x, label, head);
    int checked = 0;
    for (int t = 0; t < 400 && checked < 20; ++t) {
      const int i = static_cast<int>(rng.below(mlp.param_count()));
      const double fd = fd_loss(mlp, params, x, label, head, i, 1e-5);
      if (std::abs(fd) < 1e-8 && std::abs(g[i]) < 1e-8) continue;  // inactive coordinate
      const double rel = std::abs(g[i] - fd) / std::max(std::abs(fd), 1e-12);
      res.residual = std::max(res.residual, rel);
      ++checked;
    }
  }
  res.pass = res.residual < 1e-6;
  return res;
}

PropertyResult check_chain_rule(std::uint64_t seed) {
  PropertyResult res{"chain-rule-identity", true, 0.0, {}};
  Rng rng(mix_seed(seed, 12));
  for (int net = 0; net < 10; ++net) {
    const Mlp mlp = random_small_net(rng);
    const Vec params = mlp.init_params(rng.next());
    const Vec x = random_vec(rng, mlp.config().input_dim);
    const int c = mlp.config().logits_per_head;
    const int label = static_cast<int>(rng.below(c));
    const int head = static_cast<int>(rng.below(mlp.config().num_heads));
    const Vec direct = mlp.loss_gradient(params, x, label, head);
    auto [logits, trace] = mlp.forward(params, x, head);
    const Vec probs = softmax(logits);
    Vec combo = Vec::Zero(mlp.param_count());
    for (int j = 0; j < c; ++j) {
      Vec ej = Vec::Zero(c);
      ej[j] = 1.0;
      combo += (probs[j] - (j == label ? 1.0 : 0.0)) * mlp.backward(params, trace, ej);
    }
    const double rel = (direct - combo).norm() / std::max(direct.norm(), 1e-300);
    res.residual = std::max(res.residual, rel);
  }
  res.pass = res.residual < 1e-10;
  return res;
}

PropertyResult check_orthogonality(std::uint64_t seed, int dims) {
  PropertyResult res{"basis-orthogonality", true, 0.0, {}};
  const int dim = std::max(dims, 4);
  const int adds = std::min(500, dim / 2);
  Rng rng(mix_seed(seed, 13));
  OrthoBasis basis(dim);
  for (int i = 0; i < adds; ++i) basis.add(random_vec(rng, dim));
  double max_dot = 0.0, max_norm_err = 0.0;
  for (int i = 0; i < basis.size(); ++i) {
    max_norm_err = std::max(max_norm_err, std::abs(basis.vector(i).norm() - 1.0));
    for (int j = i + 1; j < basis.size(); ++j) {
      max_dot = std::max(max_dot, std::abs(basis.vector(i).dot(basis.vector(j))));
    }
  }
  res.residual = std::max(max_dot, max_norm_err * 1e3);  // both must clear their bound
  res.pass = max_dot < 1e-6 && max_norm_err < 1e-9;
  std::ostringstream detail;
  detail << basis.size() << " vectors, max |dot| " << max_dot << ", max norm err "
         << max_norm_err;
  res.detail = detail.str();
  return res;
}

PropertyResult check_descent_identity(std::uint64_t seed, int dims, bool inject_sign_flip) {
  PropertyResult res{"descent-identity", true, 0.0, {}};
  const int dim = std::max(dims, 8);
  Rng rng(mix_seed(seed, 14));
  for (int trial = 0; trial < 100; ++trial) {
    OrthoBasis basis(dim);
    const int n = 1 + static_cast<int>(rng.below(std::min(dim / 2, 32)));
    for (int i = 0; i < n; ++i) basis.add(random_vec(rng, dim));
    const Vec g = random_vec(rng, dim);
    Vec gt = basis.projected(g);
    if (inject_sign_flip) gt = -gt;  // debug mutation: must break the identity
    // <-g~, g> = -||g~||^2
    const double lhs = -gt.dot(g);
    const double rhs = -gt.squaredNorm();
    const double resid = std::abs(lhs - rhs) / std::max(g.squaredNorm(), 1e-300);
    res.residual = std::max(res.residual, resid);
  }
  res.pass = res.residual < 1e-9;
  return res;
}

PropertyResult check_projection_oracle(std::uint64_t seed, int dims) {
  PropertyResult res{"projection-oracle", true, 0.0, {}};
  const int dim = std::min(std::max(dims, 16), 200);
  Rng rng(mix_seed(seed, 15));
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(dim / 2));
    OrthoBasis basis(dim);
    Eigen::MatrixXd candidates(dim, n);
    int accepted = 0;
    for (int i = 0; i < n; ++i) {
      const Vec c = random_vec(rng, dim);
      if (basis.add(c).accepted) candidates.col(accepted++) = c;
    }
    const Vec g = random_vec(rng, dim);
    const Vec fast = basis.projected(g);
    // dense-decomposition oracle: null-space projector of the candidate span
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(candidates.leftCols(accepted));
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd null_basis = q.rightCols(dim - accepted);
    const Vec oracle = null_basis * (null_basis.transpose() * g);
    const double err = (fast - oracle).norm() / std::max(g.norm(), 1e-300);
    res.residual = std::max(res.residual, err);
  }
  res.pass = res.residual < 1e-8;
  return res;
}

PropertyResult check_reduction_to_sgd(std::uint64_t seed) {
  PropertyResult res{"reduction-to-sgd", true, 0.0, {}};
  Rng rng(mix_seed(seed, 16));
  ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dims = {10, 10};
  cfg.logits_per_head = 3;
  cfg.num_heads = 1;
  const Mlp mlp(cfg);
  const Vec params0 = mlp.init_params(rng.next());

  // one fixed stream of batches, replayed identically for every method
  std::vector<Batch> batches;
  for (int step = 0; step < 100; ++step) {
    Batch b;
    b.inputs.resize(5, cfg.input_dim);
    b.labels.resize(5);
    b.heads.resize(5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < cfg.input_dim; ++j) b.inputs(i, j) = rng.uniform(0, 1);
      b.labels[i] = static_cast<int>(rng.below(cfg.logits_per_head));
      b.heads[i] = 0;
    }
    batches.push_back(std::move(b));
  }

  const double lr = 1e-3;
  Vec sgd = params0, ogd = params0, ewc = params0, agem = params0;
  OgdState ogd_state(mlp, OgdConfig{});
  EwcState ewc_state;
  EpisodicMemory memory;
  Rng agem_rng(mix_seed(seed, 17));
  bool identical = true;
  for (const Batch& b : batches) {
    sgd = sgd_step(mlp, sgd, b, lr);
    ogd = ogd_step(mlp, ogd, b, ogd_state, lr);
    ewc = ewc_step(mlp, ewc, b, ewc_state, lr);
    agem = agem_step(mlp, agem, b, memory, lr, agem_rng);
    identical = identical && (sgd == ogd) && (sgd == ewc) && (sgd == agem);
  }
  res.pass = identical;
  res.residual = identical ? 0.0 : 1.0;
  res.detail = identical ? "trajectories bit-identical over 100 steps"
                         : "trajectory divergence detected";
  return res;
}

}  // namespace

std::vector<PropertyResult> run_verify(const VerifyOptions& options) {
  std::vector<PropertyResult> results;
  results.push_back(check_gradient_fd(options.seed));
  results.push_back(check_chain_rule(options.seed));
  results.push_back(check_orthogonality(options.seed, options.dims));
  results.push_back(check_descent_identity(options.seed, options.dims, options.inject_sign_flip));
  results.push_back(check_projection_oracle(options.seed, options.dims));
  results.push_back(check_reduction_to_sgd(options.seed));
  return results;
}

}  // namespace ogdbench
