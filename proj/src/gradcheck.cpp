#include "hazekit/gradcheck.h"

#include <cmath>

namespace hazekit {

GradCheckResult finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  const Tensor& analytic_grad, double h) {
    if (!(x.shape == analytic_grad.shape)) throw_shape("gradcheck: gradient shape mismatch");
    GradCheckResult r;
    Tensor probe = x;
    for (size_t i = 0; i < x.v.size(); ++i) {
        const float orig = x.v[i];
        const float xp = static_cast<float>(static_cast<double>(orig) + h);
        const float xm = static_cast<float>(static_cast<double>(orig) - h);
        probe.v[i] = xp;
        const double fp = f(probe);
        probe.v[i] = xm;
        const double fm = f(probe);
        probe.v[i] = orig;
        // divide by the actual float step, not 2h, to kill quantization error
        const double num = (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
        const double ana = static_cast<double>(analytic_grad.v[i]);
        const double denom = std::max({1.0, std::fabs(ana), std::fabs(num)});
        const double rel = std::fabs(ana - num) / denom;
        if (rel > r.max_rel_err) {
            r.max_rel_err = rel;
            r.worst_index = static_cast<int64_t>(i);
            r.analytic = ana;
            r.numeric = num;
        }
    }
    return r;
}

}  // namespace hazekit
