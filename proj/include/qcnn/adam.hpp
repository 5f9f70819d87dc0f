#pragma once

#include <cstdint>
#include <vector>

#include "qcnn/tensor.hpp"

namespace qcnn::nn {

struct AdamConfig {
    float lr = 0.001f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Per-parameter optimizer state: moment estimates and the step counter.
struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    std::int64_t step_count = 0;
    AdamConfig hyper;

    AdamState() = default;
    AdamState(const std::vector<int>& shape, AdamConfig cfg)
        : first_moment(shape), second_moment(shape), hyper(cfg) {}
};

// One bias-corrected Adam update, applied in place from param.grad.
void adam_step(Parameter& param, AdamState& state);

// Convenience wrapper owning one AdamState per parameter.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg = {});

    void step();
    void zero_grad();

    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Parameter*> params_;
    std::vector<AdamState> states_;
    AdamConfig cfg_;
};

} // namespace qcnn::nn
