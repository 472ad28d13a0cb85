#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xag {

struct GradCheckResult {
  std::string op;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Checks every differentiable tape op (and the composite forwards built on
/// them) against central finite differences on seeded random inputs.
/// Relative error is |ad - fd| / max(1, |ad|, |fd|).
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, double tol = 1e-4,
                                           double step = 1e-5);

bool all_passed(const std::vector<GradCheckResult>& results);

}  // namespace xag
