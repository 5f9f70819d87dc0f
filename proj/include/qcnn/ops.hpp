#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qcnn/rng.hpp"
#include "qcnn/tensor.hpp"

namespace qcnn::nn {

// ---- convolution ----

// Cross-correlation of a CxHxW input with OxCxKxK filters plus bias.
// Output is OxH'xW' with H' = (H + 2*padding - K)/stride + 1.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                      int padding);

struct Conv2dGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight,
                            int stride, int padding);

// ---- max pooling (window 2, stride 2) ----

struct MaxPoolResult {
    Tensor output;
    // Flat input index of the window maximum per output element; ties go to
    // the first maximal element in row-major window order.
    std::vector<std::size_t> argmax;
};

MaxPoolResult maxpool2d_forward(const Tensor& input);

Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                          const std::vector<int>& input_shape);

// ---- relu ----

Tensor relu_forward(const Tensor& input);

// Derivative at exactly 0 is defined as 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

// ---- dropout ----

struct DropoutResult {
    Tensor output;
    // Per-element multiplier: 0 for dropped elements, 1/(1-rate) for
    // survivors. Empty in eval mode (identity).
    Tensor mask;
};

// Inverted dropout: eval mode is the identity. `rng` is consumed only in
// train mode with rate > 0.
DropoutResult dropout_forward(const Tensor& input, float rate, bool train, Rng* rng);

Tensor dropout_backward(const Tensor& grad_out, const Tensor& mask);

// ---- linear ----

// y = W x + b with x of length n, W of shape m x n, b of length m.
Tensor linear_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

struct LinearGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight);

// ---- negative log-likelihood over a 2-class distribution ----

inline constexpr double kNllEpsilon = 1e-12;
inline constexpr double kProbSumTolerance = 1e-6;

// loss = -ln(max(probs[target], eps)). Rejects distributions whose entries
// are negative or whose sum is more than 1e-6 away from 1.
double nll_loss(const std::array<double, 2>& probs, int target);
std::array<double, 2> nll_loss_backward(const std::array<double, 2>& probs, int target);

double nll_loss(const Tensor& probs, int target);
Tensor nll_loss_backward(const Tensor& probs, int target);

} // namespace qcnn::nn
