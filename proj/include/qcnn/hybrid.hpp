#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qcnn/layers.hpp"
#include "qcnn/qsim.hpp"
#include "qcnn/tensor.hpp"

namespace qcnn::hybrid {

// How the head turns the circuit into probabilities: exact amplitudes, or
// frequency estimates from a finite number of measurements.
struct HeadMode {
    enum class Kind { Analytic, Shots };
    Kind kind = Kind::Analytic;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;

    static HeadMode analytic() { return HeadMode{}; }
    static HeadMode with_shots(std::uint64_t shots, std::uint64_t seed) {
        return HeadMode{Kind::Shots, shots, seed};
    }

    bool is_analytic() const { return kind == Kind::Analytic; }
    std::string describe() const;
};

// The fixed H -> Ry(theta) circuit mapping the classical scalar to a 2-class
// distribution: p1 = P(measure |1>) = (1 + sin theta)/2, p0 = 1 - p1.
// Class index 1 is the malignant class everywhere in this project.
class QuantumHead {
public:
    explicit QuantumHead(HeadMode mode = HeadMode::analytic());

    // `sample_key` picks the deterministic shot stream; ignored in analytic
    // mode. The head keeps no state between calls.
    std::array<double, 2> forward(double theta, std::uint64_t sample_key = 0) const;

    // Chains an upstream gradient over [p0, p1] through the parameter-shift
    // derivative of P(1); returns dLoss/dtheta.
    double backward(const std::array<double, 2>& upstream, double theta,
                    std::uint64_t sample_key = 0) const;

    const qsim::Circuit& circuit() const { return circuit_; }
    const HeadMode& mode() const { return mode_; }

private:
    double prob_one_at(double theta, std::uint64_t stream) const;

    qsim::Circuit circuit_;
    HeadMode mode_;
};

// A classical layer stack ending in a single scalar, feeding the quantum
// head. Shape chains are validated at construction.
class HybridModel {
public:
    struct Context {
        std::vector<nn::LayerState> states;
        double theta = 0.0;
        std::array<double, 2> probs{0.0, 0.0};
        std::uint64_t sample_key = 0;
        bool ready = false;
    };

    HybridModel(std::string id, std::vector<int> input_shape,
                std::vector<std::unique_ptr<nn::Layer>> layers, QuantumHead head);

    const std::string& id() const { return id_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    int flatten_size() const { return flatten_size_; }

    // (in, out) feature sizes of the fully connected layers in order.
    std::vector<std::pair<int, int>> linear_dims() const;

    std::array<double, 2> forward(const nn::Tensor& image, Context& ctx, nn::Mode mode,
                                  Rng* dropout_rng = nullptr, std::uint64_t sample_key = 0) const;

    // Accumulates into parameter gradients; `upstream` is dLoss/d[p0,p1].
    void backward(const std::array<double, 2>& upstream, Context& ctx);

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;
    std::size_t parameter_count() const;
    void zero_grad();

    const std::vector<std::unique_ptr<nn::Layer>>& layers() const { return layers_; }
    QuantumHead& head() { return head_; }
    const QuantumHead& head() const { return head_; }
    void set_head(QuantumHead head) { head_ = std::move(head); }

private:
    void validate_chain();

    std::string id_;
    std::vector<int> input_shape_;
    std::vector<std::unique_ptr<nn::Layer>> layers_;
    QuantumHead head_;
    int flatten_size_ = 0;
};

// The three architectures plus a shrunken variant for tests and experiments.
HybridModel build_m1(std::uint64_t seed = 1, float dropout_rate = 0.25f);
HybridModel build_m2(std::uint64_t seed = 2);
HybridModel build_m3(std::uint64_t seed = 3, float dropout_rate = 0.25f);
HybridModel build_toy(std::uint64_t seed = 4, int in_channels = 1, int image_size = 8);

// Dispatch by id: "m1", "m2", "m3", or "toy".
HybridModel build_model(const std::string& id, std::uint64_t seed);
int model_input_size(const std::string& id);

} // namespace qcnn::hybrid
