#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qcnn/tensor.hpp"

namespace qcnn::nn {

// One tensor whose elements are wiggled during a finite-difference check,
// paired with the analytic gradient to compare against.
struct GradCheckTarget {
    Tensor* value;
    const Tensor* grad;
    std::string name;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_target;
};

// Central-difference verification of analytic gradients.
//
// `loss` evaluates the fragment and returns the scalar loss; it must be pure
// (dropout in eval mode or with a frozen mask). `compute_grads` zeroes and
// refills every target's gradient via the analytic backward path. Each
// target's error is the max-norm of (fd - analytic) scaled by the gradient
// magnitude, so a tensor of tiny mismatches on an O(1) gradient scores tiny.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<void()>& compute_grads,
                           const std::vector<GradCheckTarget>& targets, double h = 1e-3);

} // namespace qcnn::nn
