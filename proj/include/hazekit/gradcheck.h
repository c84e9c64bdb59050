#pragma once

#include <functional>

#include "hazekit/tensor.h"

namespace hazekit {

// Central finite differences against an analytic gradient. Deliberately
// independent of the tape's backward path: it only re-evaluates the supplied
// forward closure at perturbed inputs.
struct GradCheckResult {
    double max_rel_err = 0.0;
    int64_t worst_index = -1;
    double analytic = 0.0, numeric = 0.0;  // values at the worst element
};

// f(x) evaluates the scalar objective; relative error per element is
// |a - n| / max(1, |a|, |n|) so tiny gradients are judged on absolute error.
GradCheckResult finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  const Tensor& analytic_grad, double h = 1e-3);

}  // namespace hazekit
