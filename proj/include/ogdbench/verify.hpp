#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ogdbench {

struct VerifyOptions {
  // Scales the synthetic problem sizes (parameter-space dimension of the
  // basis properties). Gradient checks always use small nets.
  int dims = 1000;
  std::uint64_t seed = 20240601;
  // Debug mutation: flips the sign of the projection inside the descent
  // identity check; the check must then fail (guards the guard).
  bool inject_sign_flip = false;
};

struct PropertyResult {
  std::string name;
  bool pass = false;
  double residual = 0.0;  // worst observed residual (property-specific scale)
  std::string detail;
};

// Runs the release-gate property suite:
//   gradient-finite-difference, chain-rule-identity, basis-orthogonality,
//   descent-identity, projection-oracle, reduction-to-sgd.
std::vector<PropertyResult> run_verify(const VerifyOptions& options);

}  // namespace ogdbench
