#pragma once

#include <functional>
#include <span>

namespace mmrec {

struct GradCheckReport {
  double max_rel_error = 0.0;
  int params_checked = 0;
  int worst_index = -1;
};

// The callable evaluates the loss at `params`; when `grad_out` is non-empty
// it must also fill the analytic gradient. It must be deterministic.
using LossAndGradFn = std::function<double(std::span<const double> params, std::span<double> grad_out)>;

// Central finite differences (f(x+eps e_i) - f(x-eps e_i)) / 2 eps against
// the analytic gradient, relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
GradCheckReport gradient_check(const LossAndGradFn& fn, std::span<const double> params, double eps);

}  // namespace mmrec
