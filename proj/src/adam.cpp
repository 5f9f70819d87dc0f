#include "qcnn/adam.hpp"

#include <cmath>

namespace qcnn::nn {

void adam_step(Parameter& param, AdamState& state) {
    if (!state.first_moment.same_shape(param.value)) {
        throw ShapeError("adam state shape " + state.first_moment.shape_string() +
                         " does not match parameter " + param.value.shape_string());
    }
    state.step_count += 1;
    const AdamConfig& h = state.hyper;
    // Bias corrections in double; per-element arithmetic stays in float.
    const double bc1 = 1.0 - std::pow(static_cast<double>(h.beta1), state.step_count);
    const double bc2 = 1.0 - std::pow(static_cast<double>(h.beta2), state.step_count);
    const float inv_bc1 = static_cast<float>(1.0 / bc1);
    const float inv_bc2 = static_cast<float>(1.0 / bc2);

    float* m = state.first_moment.data();
    float* v = state.second_moment.data();
    float* p = param.value.data();
    const float* g = param.grad.data();
    const std::size_t n = param.value.numel();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = h.beta1 * m[i] + (1.0f - h.beta1) * g[i];
        v[i] = h.beta2 * v[i] + (1.0f - h.beta2) * g[i] * g[i];
        const float m_hat = m[i] * inv_bc1;
        const float v_hat = v[i] * inv_bc2;
        p[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    states_.reserve(params_.size());
    for (const Parameter* p : params_) {
        states_.emplace_back(p->value.shape(), cfg_);
    }
}

void AdamOptimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        adam_step(*params_[i], states_[i]);
    }
}

void AdamOptimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

} // namespace qcnn::nn
