#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace loorisk {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0;  // worst error seen
  double tolerance = 0;
};

/// Central finite differences of d1 and d2 against value and d1, for every
/// loss family and both smooth regularizers at `points` random points each.
/// Relative error is |analytic - fd| / max(|analytic|, 1); both steps
/// 1e-5 and 1e-6 must pass.
std::vector<CheckResult> derivative_checks(int points, std::uint64_t seed, double tol_d1 = 1e-5,
                                           double tol_d2 = 1e-4);

/// max_i |ALO_i - LO_i| for ridge + squared loss, where ALO is exact.
std::vector<CheckResult> ridge_alo_identity_checks(int instances, std::uint64_t seed,
                                                   double tol = 1e-8);

}  // namespace loorisk
