#pragma once

// Randomized identity and inequality checks shared by the property tests and
// the acceptance runner.

#include <cstdint>
#include <string>
#include <vector>

namespace mflab::oracle {

struct IdentityCheck {
  std::string name;
  int trials = 0;
  /// Largest residual over all trials.
  double worst = 0.0;
};

/// CCR, adjointness, sector preservation, Weyl composition, Weyl displacement
/// covariance and dGamma(1) = N on random instances.
std::vector<IdentityCheck> algebra_suite(int trials, std::uint64_t seed);

struct BoundCheck {
  std::string name;
  int trials = 0;
  int violations = 0;
  /// Largest lhs / rhs seen.
  double worst_ratio = 0.0;
};

/// Number-operator bounds on a(f), a*(f), phi(f) and dGamma(J).
std::vector<BoundCheck> operator_bound_suite(int trials, std::uint64_t seed);

}  // namespace mflab::oracle
