#include "qcnn/layers.hpp"

#include <cmath>

namespace qcnn::nn {

void Layer::require_ready(const LayerState& state, const char* what) {
    if (!state.ready) {
        throw InvalidStateError(std::string(what) + " backward called without a forward pass");
    }
}

namespace {

// Weights and biases start uniform in +-1/sqrt(fan_in).
void init_uniform(Tensor& t, int fan_in, Rng& rng) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t[i] = rng.uniform_f(-bound, bound);
    }
}

} // namespace

// ---- Conv2d ----

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride,
               int padding)
    : weight_(name + ".weight", Tensor({out_channels, in_channels, kernel, kernel})),
      bias_(name + ".bias", Tensor({out_channels})),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {}

void Conv2d::init(Rng& rng) {
    const int fan_in = in_channels_ * kernel_ * kernel_;
    init_uniform(weight_.value, fan_in, rng);
    init_uniform(bias_.value, fan_in, rng);
}

Tensor Conv2d::forward(const Tensor& input, LayerState& state, Mode, Rng*) const {
    Tensor out = conv2d_forward(input, weight_.value, bias_.value, stride_, padding_);
    state.input = input;
    state.ready = true;
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out, const LayerState& state) {
    require_ready(state, "conv2d");
    Conv2dGrads g = conv2d_backward(grad_out, state.input, weight_.value, stride_, padding_);
    for (std::size_t i = 0; i < weight_.grad.numel(); ++i) weight_.grad[i] += g.weight[i];
    for (std::size_t i = 0; i < bias_.grad.numel(); ++i) bias_.grad[i] += g.bias[i];
    return std::move(g.input);
}

std::vector<int> Conv2d::output_shape(const std::vector<int>& in) const {
    if (in.size() != 3 || in[0] != in_channels_) {
        throw ShapeError("conv2d expects [" + std::to_string(in_channels_) + "xHxW], got " +
                         Tensor::shape_string(in));
    }
    const int oh = (in[1] + 2 * padding_ - kernel_) / stride_ + 1;
    const int ow = (in[2] + 2 * padding_ - kernel_) / stride_ + 1;
    if (oh < 1 || ow < 1) {
        throw ShapeError("conv2d kernel does not fit input " + Tensor::shape_string(in));
    }
    return {out_channels_, oh, ow};
}

std::string Conv2d::describe() const {
    return "conv2d(" + std::to_string(in_channels_) + "->" + std::to_string(out_channels_) + ",k" +
           std::to_string(kernel_) + ",s" + std::to_string(stride_) + ",p" +
           std::to_string(padding_) + ")";
}

// ---- MaxPool2d ----

Tensor MaxPool2d::forward(const Tensor& input, LayerState& state, Mode, Rng*) const {
    MaxPoolResult r = maxpool2d_forward(input);
    state.argmax = std::move(r.argmax);
    state.input_shape = input.shape();
    state.ready = true;
    return std::move(r.output);
}

Tensor MaxPool2d::backward(const Tensor& grad_out, const LayerState& state) {
    require_ready(state, "maxpool2d");
    return maxpool2d_backward(grad_out, state.argmax, state.input_shape);
}

std::vector<int> MaxPool2d::output_shape(const std::vector<int>& in) const {
    if (in.size() != 3 || in[1] < 2 || in[2] < 2) {
        throw ShapeError("maxpool2 needs CxHxW with H,W >= 2, got " + Tensor::shape_string(in));
    }
    return {in[0], in[1] / 2, in[2] / 2};
}

// ---- ReLU ----

Tensor ReLU::forward(const Tensor& input, LayerState& state, Mode, Rng*) const {
    state.input = input;
    state.ready = true;
    return relu_forward(input);
}

Tensor ReLU::backward(const Tensor& grad_out, const LayerState& state) {
    require_ready(state, "relu");
    return relu_backward(grad_out, state.input);
}

// ---- Dropout ----

Tensor Dropout::forward(const Tensor& input, LayerState& state, Mode mode, Rng* rng) const {
    DropoutResult r = dropout_forward(input, rate_, mode == Mode::Train, rng);
    state.mask = std::move(r.mask);
    state.ready = true;
    return std::move(r.output);
}

Tensor Dropout::backward(const Tensor& grad_out, const LayerState& state) {
    require_ready(state, "dropout");
    return dropout_backward(grad_out, state.mask);
}

std::string Dropout::describe() const {
    return "dropout(" + std::to_string(rate_) + ")";
}

// ---- Flatten ----

Tensor Flatten::forward(const Tensor& input, LayerState& state, Mode, Rng*) const {
    state.input_shape = input.shape();
    state.ready = true;
    Tensor out = input;
    out.reshape({static_cast<int>(input.numel())});
    return out;
}

Tensor Flatten::backward(const Tensor& grad_out, const LayerState& state) {
    require_ready(state, "flatten");
    Tensor g = grad_out;
    g.reshape(state.input_shape);
    return g;
}

std::vector<int> Flatten::output_shape(const std::vector<int>& in) const {
    int n = 1;
    for (int d : in) n *= d;
    return {n};
}

// ---- Linear ----

Linear::Linear(std::string name, int in_features, int out_features)
    : weight_(name + ".weight", Tensor({out_features, in_features})),
      bias_(name + ".bias", Tensor({out_features})),
      in_features_(in_features),
      out_features_(out_features) {}

void Linear::init(Rng& rng) {
    init_uniform(weight_.value, in_features_, rng);
    init_uniform(bias_.value, in_features_, rng);
}

Tensor Linear::forward(const Tensor& input, LayerState& state, Mode, Rng*) const {
    Tensor out = linear_forward(input, weight_.value, bias_.value);
    state.input = input;
    state.ready = true;
    return out;
}

Tensor Linear::backward(const Tensor& grad_out, const LayerState& state) {
    require_ready(state, "linear");
    LinearGrads g = linear_backward(grad_out, state.input, weight_.value);
    for (std::size_t i = 0; i < weight_.grad.numel(); ++i) weight_.grad[i] += g.weight[i];
    for (std::size_t i = 0; i < bias_.grad.numel(); ++i) bias_.grad[i] += g.bias[i];
    return std::move(g.input);
}

std::vector<int> Linear::output_shape(const std::vector<int>& in) const {
    if (in.size() != 1 || in[0] != in_features_) {
        throw ShapeError("linear expects [" + std::to_string(in_features_) + "], got " +
                         Tensor::shape_string(in));
    }
    return {out_features_};
}

std::string Linear::describe() const {
    return "linear(" + std::to_string(in_features_) + "->" + std::to_string(out_features_) + ")";
}

} // namespace qcnn::nn
