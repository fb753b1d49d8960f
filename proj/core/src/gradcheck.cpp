#include "mmrec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmrec/errors.hpp"

namespace mmrec {

GradCheckReport gradient_check(const LossAndGradFn& fn, std::span<const double> params, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("gradient_check: eps must be positive");

  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> analytic(theta.size(), 0.0);
  double base = fn(theta, analytic);
  if (!std::isfinite(base)) throw NumericError("gradient_check: non-finite loss at the evaluation point");

  GradCheckReport report;
  report.params_checked = static_cast<int>(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double saved = theta[i];
    theta[i] = saved + eps;
    double up = fn(theta, {});
    theta[i] = saved - eps;
    double down = fn(theta, {});
    theta[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("gradient_check: non-finite loss while probing coordinate " + std::to_string(i));
    }
    double numeric = (up - down) / (2.0 * eps);
    double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = static_cast<int>(i);
    }
  }
  return report;
}

}  // namespace mmrec
