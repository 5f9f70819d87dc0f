#include "qcnn/hybrid.hpp"

#include <cmath>

#include "qcnn/error.hpp"
#include "qcnn/rng.hpp"

namespace qcnn::hybrid {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

} // namespace

std::string HeadMode::describe() const {
    if (is_analytic()) return "analytic";
    return "shots:" + std::to_string(shots);
}

QuantumHead::QuantumHead(HeadMode mode) : circuit_(qsim::Circuit::h_ry()), mode_(mode) {
    if (mode_.kind == HeadMode::Kind::Shots && mode_.shots < 1) {
        throw ContractError("shot-mode head requires shots >= 1");
    }
}

double QuantumHead::prob_one_at(double theta, std::uint64_t stream) const {
    const qsim::QubitState state = qsim::run_circuit(circuit_, {theta});
    if (mode_.is_analytic()) {
        return qsim::prob_one(state);
    }
    const qsim::ShotCounts counts = qsim::sample_shots(state, mode_.shots, stream);
    return static_cast<double>(counts.n1) / static_cast<double>(mode_.shots);
}

std::array<double, 2> QuantumHead::forward(double theta, std::uint64_t sample_key) const {
    if (!std::isfinite(theta)) {
        throw ContractError("quantum head requires a finite angle");
    }
    const double p1 = prob_one_at(theta, Rng::mix(mode_.seed, sample_key, 0));
    return {1.0 - p1, p1};
}

double QuantumHead::backward(const std::array<double, 2>& upstream, double theta,
                             std::uint64_t sample_key) const {
    if (!std::isfinite(theta)) {
        throw ContractError("quantum head requires a finite angle");
    }
    // Two-point shift on the projector expectation P(1); dp0 = -dp1.
    const double p1_plus = prob_one_at(theta + kHalfPi, Rng::mix(mode_.seed, sample_key, 1));
    const double p1_minus = prob_one_at(theta - kHalfPi, Rng::mix(mode_.seed, sample_key, 2));
    const double dp1 = (p1_plus - p1_minus) / 2.0;
    return (upstream[1] - upstream[0]) * dp1;
}

HybridModel::HybridModel(std::string id, std::vector<int> input_shape,
                         std::vector<std::unique_ptr<nn::Layer>> layers, QuantumHead head)
    : id_(std::move(id)),
      input_shape_(std::move(input_shape)),
      layers_(std::move(layers)),
      head_(std::move(head)) {
    validate_chain();
}

void HybridModel::validate_chain() {
    std::vector<int> shape = input_shape_;
    for (const auto& layer : layers_) {
        shape = layer->output_shape(shape);
        if (dynamic_cast<const nn::Flatten*>(layer.get()) != nullptr) {
            flatten_size_ = shape.at(0);
        }
    }
    if (shape != std::vector<int>{1}) {
        throw ShapeError("model " + id_ + " must end in a single scalar, chain ends at " +
                         nn::Tensor::shape_string(shape));
    }
}

std::vector<std::pair<int, int>> HybridModel::linear_dims() const {
    std::vector<std::pair<int, int>> dims;
    for (const auto& layer : layers_) {
        if (const auto* fc = dynamic_cast<const nn::Linear*>(layer.get())) {
            dims.emplace_back(fc->in_features(), fc->out_features());
        }
    }
    return dims;
}

std::array<double, 2> HybridModel::forward(const nn::Tensor& image, Context& ctx, nn::Mode mode,
                                           Rng* dropout_rng, std::uint64_t sample_key) const {
    if (image.shape() != input_shape_) {
        throw ShapeError("model " + id_ + " expects input " +
                         nn::Tensor::shape_string(input_shape_) + ", got " + image.shape_string());
    }
    ctx.states.assign(layers_.size(), nn::LayerState{});
    nn::Tensor x = image;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i]->forward(x, ctx.states[i], mode, dropout_rng);
    }
    ctx.theta = static_cast<double>(x[0]);
    ctx.sample_key = sample_key;
    ctx.probs = head_.forward(ctx.theta, sample_key);
    ctx.ready = true;
    return ctx.probs;
}

void HybridModel::backward(const std::array<double, 2>& upstream, Context& ctx) {
    if (!ctx.ready) {
        throw InvalidStateError("model backward called without a forward pass");
    }
    const double dtheta = head_.backward(upstream, ctx.theta, ctx.sample_key);
    nn::Tensor g({1}, {static_cast<float>(dtheta)});
    for (std::size_t i = layers_.size(); i-- > 0;) {
        g = layers_[i]->backward(g, ctx.states[i]);
    }
}

std::vector<nn::Parameter*> HybridModel::parameters() {
    std::vector<nn::Parameter*> out;
    for (const auto& layer : layers_) {
        for (nn::Parameter* p : layer->parameters()) out.push_back(p);
    }
    return out;
}

std::vector<const nn::Parameter*> HybridModel::parameters() const {
    std::vector<const nn::Parameter*> out;
    for (const auto& layer : layers_) {
        for (nn::Parameter* p : const_cast<nn::Layer&>(*layer).parameters()) out.push_back(p);
    }
    return out;
}

std::size_t HybridModel::parameter_count() const {
    std::size_t n = 0;
    for (const nn::Parameter* p : parameters()) n += p->value.numel();
    return n;
}

void HybridModel::zero_grad() {
    for (nn::Parameter* p : parameters()) p->zero_grad();
}

namespace {

HybridModel assemble(std::string id, std::vector<int> input_shape,
                     std::vector<std::unique_ptr<nn::Layer>> layers, std::uint64_t seed) {
    Rng rng(Rng::mix(0x9c, seed));
    for (auto& layer : layers) layer->init(rng);
    return HybridModel(std::move(id), std::move(input_shape), std::move(layers), QuantumHead());
}

} // namespace

HybridModel build_m1(std::uint64_t seed, float dropout_rate) {
    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(std::make_unique<nn::Conv2d>("conv1", 3, 10, 5));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::MaxPool2d>());
    layers.push_back(std::make_unique<nn::Conv2d>("conv2", 10, 20, 5));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::MaxPool2d>());
    layers.push_back(std::make_unique<nn::Dropout>(dropout_rate));
    layers.push_back(std::make_unique<nn::Flatten>());
    layers.push_back(std::make_unique<nn::Linear>("fc1", 500, 500));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Linear>("fc2", 500, 1));
    return assemble("m1", {3, 32, 32}, std::move(layers), seed);
}

HybridModel build_m2(std::uint64_t seed) {
    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(std::make_unique<nn::Conv2d>("conv1", 3, 6, 5));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::MaxPool2d>());
    layers.push_back(std::make_unique<nn::Conv2d>("conv2", 6, 16, 5));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::MaxPool2d>());
    layers.push_back(std::make_unique<nn::Flatten>());
    layers.push_back(std::make_unique<nn::Linear>("fc1", 400, 120));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Linear>("fc2", 120, 84));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Linear>("fc3", 84, 1));
    return assemble("m2", {3, 32, 32}, std::move(layers), seed);
}

HybridModel build_m3(std::uint64_t seed, float dropout_rate) {
    // 250 -(k5,s2,p2)-> 125 -(k5,s2,p0)-> 61; 15*61*61 = 55815.
    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(std::make_unique<nn::Conv2d>("conv1", 3, 6, 5, 2, 2));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Dropout>(dropout_rate));
    layers.push_back(std::make_unique<nn::Conv2d>("conv2", 6, 15, 5, 2, 0));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Dropout>(dropout_rate));
    layers.push_back(std::make_unique<nn::Flatten>());
    layers.push_back(std::make_unique<nn::Linear>("fc1", 55815, 120));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Linear>("fc2", 120, 84));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Linear>("fc3", 84, 1));
    return assemble("m3", {3, 250, 250}, std::move(layers), seed);
}

HybridModel build_toy(std::uint64_t seed, int in_channels, int image_size) {
    const int conv_out = image_size - 2; // k3, stride 1, no padding
    const int pooled = conv_out / 2;
    const int flat = 2 * pooled * pooled;
    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(std::make_unique<nn::Conv2d>("conv1", in_channels, 2, 3));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::MaxPool2d>());
    layers.push_back(std::make_unique<nn::Flatten>());
    layers.push_back(std::make_unique<nn::Linear>("fc1", flat, 8));
    layers.push_back(std::make_unique<nn::ReLU>());
    layers.push_back(std::make_unique<nn::Linear>("fc2", 8, 1));
    return assemble("toy", {in_channels, image_size, image_size}, std::move(layers), seed);
}

HybridModel build_model(const std::string& id, std::uint64_t seed) {
    if (id == "m1") return build_m1(seed);
    if (id == "m2") return build_m2(seed);
    if (id == "m3") return build_m3(seed);
    if (id == "toy") return build_toy(seed, 3, 8);
    throw UsageError("unknown model id '" + id + "' (expected m1, m2, m3, or toy)");
}

int model_input_size(const std::string& id) {
    if (id == "m1" || id == "m2") return 32;
    if (id == "m3") return 250;
    if (id == "toy") return 8;
    throw UsageError("unknown model id '" + id + "'");
}

} // namespace qcnn::hybrid
