#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mmaux/param.hpp"

namespace mmaux {

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  long coords_checked = 0;

  std::string describe() const;
};

// Central-difference check of every coordinate of every param against the
// analytic gradient produced by loss_fn(true). loss_fn(false) must evaluate
// the same loss without touching grads. eps must lie in (0, 1e-3].
// Relative error uses max(|analytic|, |numeric|, 1e-6) as denominator;
// pass iff the max over all coordinates is < tol.
GradCheckReport finite_diff_check(const std::vector<Param*>& params,
                                  const std::function<double(bool with_grad)>& loss_fn,
                                  double eps, double tol);

}  // namespace mmaux
