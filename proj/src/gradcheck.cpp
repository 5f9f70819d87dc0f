#include "qcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace qcnn::nn {

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           const std::vector<GradCheckTarget>& targets, double h) {
    compute_grads();

    // One error for the whole gradient vector: max-norm of (fd - analytic)
    // over every wiggled element, scaled by the gradient's own max-norm.
    // Elements whose true derivative is zero then compare against the
    // fragment's gradient scale instead of bare rounding noise.
    GradCheckReport report;
    double max_abs_diff = 0.0;
    double scale = 0.0;
    for (const GradCheckTarget& target : targets) {
        const std::vector<float> analytic = target.grad->vec();
        Tensor& value = *target.value;

        for (std::size_t i = 0; i < value.numel(); ++i) {
            const float orig = value[i];
            value[i] = static_cast<float>(orig + h);
            const double actual_up = static_cast<double>(value[i]) - static_cast<double>(orig);
            const double l_plus = loss();
            value[i] = static_cast<float>(orig - h);
            const double actual_down = static_cast<double>(orig) - static_cast<double>(value[i]);
            const double l_minus = loss();
            value[i] = orig;
            // The stored perturbations are float-quantized; divide by what
            // was actually applied.
            const double fd = (l_plus - l_minus) / (actual_up + actual_down);

            const double an = static_cast<double>(analytic[i]);
            if (std::abs(fd - an) > max_abs_diff) {
                max_abs_diff = std::abs(fd - an);
                report.worst_target = target.name;
            }
            scale = std::max({scale, std::abs(fd), std::abs(an)});
        }
    }
    report.max_rel_error = scale < 1e-12 ? 0.0 : max_abs_diff / scale;
    return report;
}

} // namespace qcnn::nn
