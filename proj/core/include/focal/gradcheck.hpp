#pragma once

#include <functional>
#include <span>
#include <string>

#include "focal/nn.hpp"

namespace focal {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Relative error |a - n| / max(|a|, |n|, 1). Below unit magnitude the
/// comparison becomes absolute, which keeps near-zero coordinates from being
/// dominated by finite-difference round-off.
double gradient_relative_error(double analytic, double numeric);

/// Compares the analytic gradients already stored in `params[k]->grad` against
/// central differences (f(w + eps) - f(w - eps)) / (2 eps), one coordinate at a
/// time, and reports the worst coordinate. `f` must not modify gradients it
/// relies on; parameter values are restored exactly afterwards.
GradCheckResult grad_check(const std::function<double()>& f, std::span<Parameter* const> params,
                           double eps = 1e-5);

}  // namespace focal
