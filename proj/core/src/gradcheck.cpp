#include "focal/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace focal {

double gradient_relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1.0});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult grad_check(const std::function<double()>& f, std::span<Parameter* const> params, double eps) {
  GradCheckResult result;
  for (Parameter* p : params) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double& w = p->value.data()[k];
      const double saved = w;
      w = saved + eps;
      const double up = f();
      w = saved - eps;
      const double down = f();
      w = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad.data()[k];
      const double err = gradient_relative_error(analytic, numeric);
      ++result.coordinates;
      if (err > result.max_rel_error || result.worst_index < 0) {
        result.max_rel_error = err;
        result.worst_parameter = p->name;
        result.worst_index = k;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace focal
