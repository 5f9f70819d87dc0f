#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qcnn/ops.hpp"
#include "qcnn/rng.hpp"
#include "qcnn/tensor.hpp"

namespace qcnn::nn {

enum class Mode { Train, Eval };

// Per-call activation cache. Owned by the caller so parameters can be shared
// by concurrent eval workers while each keeps its own buffers.
struct LayerState {
    Tensor input;
    Tensor mask;                     // dropout multiplier
    std::vector<std::size_t> argmax; // pooling routing
    std::vector<int> input_shape;
    bool ready = false;
};

class Layer {
public:
    virtual ~Layer() = default;

    // Pure with respect to the layer itself; activations go into `state`.
    virtual Tensor forward(const Tensor& input, LayerState& state, Mode mode,
                           Rng* dropout_rng) const = 0;

    // Returns grad wrt the layer input and accumulates into parameter grads.
    virtual Tensor backward(const Tensor& grad_out, const LayerState& state) = 0;

    virtual std::vector<Parameter*> parameters() { return {}; }
    virtual std::vector<int> output_shape(const std::vector<int>& input_shape) const = 0;
    virtual std::string describe() const = 0;
    virtual void init(Rng&) {}

protected:
    static void require_ready(const LayerState& state, const char* what);
};

class Conv2d : public Layer {
public:
    Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride = 1,
           int padding = 0);

    Tensor forward(const Tensor& input, LayerState& state, Mode mode, Rng* rng) const override;
    Tensor backward(const Tensor& grad_out, const LayerState& state) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    std::string describe() const override;
    void init(Rng& rng) override;

    const Parameter& weight() const { return weight_; }
    const Parameter& bias() const { return bias_; }

private:
    Parameter weight_;
    Parameter bias_;
    int in_channels_, out_channels_, kernel_, stride_, padding_;
};

class MaxPool2d : public Layer {
public:
    Tensor forward(const Tensor& input, LayerState& state, Mode mode, Rng* rng) const override;
    Tensor backward(const Tensor& grad_out, const LayerState& state) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    std::string describe() const override { return "maxpool2"; }
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& input, LayerState& state, Mode mode, Rng* rng) const override;
    Tensor backward(const Tensor& grad_out, const LayerState& state) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    std::string describe() const override { return "relu"; }
};

class Dropout : public Layer {
public:
    explicit Dropout(float rate) : rate_(rate) {}

    Tensor forward(const Tensor& input, LayerState& state, Mode mode, Rng* rng) const override;
    Tensor backward(const Tensor& grad_out, const LayerState& state) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    std::string describe() const override;

    float rate() const { return rate_; }

private:
    float rate_;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& input, LayerState& state, Mode mode, Rng* rng) const override;
    Tensor backward(const Tensor& grad_out, const LayerState& state) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    std::string describe() const override { return "flatten"; }
};

class Linear : public Layer {
public:
    Linear(std::string name, int in_features, int out_features);

    Tensor forward(const Tensor& input, LayerState& state, Mode mode, Rng* rng) const override;
    Tensor backward(const Tensor& grad_out, const LayerState& state) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    std::string describe() const override;
    void init(Rng& rng) override;

    int in_features() const { return in_features_; }
    int out_features() const { return out_features_; }

private:
    Parameter weight_;
    Parameter bias_;
    int in_features_, out_features_;
};

} // namespace qcnn::nn
