#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace qcnn::qsim {

// The whole register: one qubit, two complex amplitudes, unit norm.
struct QubitState {
    std::complex<double> amp0{1.0, 0.0};
    std::complex<double> amp1{0.0, 0.0};

    double norm_sq() const { return std::norm(amp0) + std::norm(amp1); }
};

enum class GateKind { Hadamard, Rx, Ry, Rz };

// A single-qubit gate. Rotation gates carry an angle; when `slot` is set the
// angle is supplied at run time from the circuit bindings instead.
struct Gate {
    GateKind kind = GateKind::Hadamard;
    double angle = 0.0;
    std::optional<int> slot;

    static Gate hadamard() { return Gate{GateKind::Hadamard, 0.0, std::nullopt}; }
    static Gate rx(double theta) { return Gate{GateKind::Rx, theta, std::nullopt}; }
    static Gate ry(double theta) { return Gate{GateKind::Ry, theta, std::nullopt}; }
    static Gate rz(double theta) { return Gate{GateKind::Rz, theta, std::nullopt}; }
    static Gate rx_param(int slot) { return Gate{GateKind::Rx, 0.0, slot}; }
    static Gate ry_param(int slot) { return Gate{GateKind::Ry, 0.0, slot}; }
    static Gate rz_param(int slot) { return Gate{GateKind::Rz, 0.0, slot}; }

    bool is_rotation() const { return kind != GateKind::Hadamard; }
};

// 2x2 unitary, row-major: {u00, u01, u10, u11}.
using GateMatrix = std::array<std::complex<double>, 4>;

GateMatrix gate_matrix(const Gate& gate, double bound_angle);

// Ordered gate list over one qubit. Parameter slots must be dense 0..n-1.
struct Circuit {
    std::vector<Gate> gates;
    int free_parameters = 0;

    Circuit() = default;
    explicit Circuit(std::vector<Gate> g);

    // The template used by every model head: H followed by Ry(theta).
    static Circuit h_ry();
};

// The only supported observable.
struct Observable {
    enum class Kind { PauliZ } kind = Kind::PauliZ;
};

QubitState apply_gate(const QubitState& state, const Gate& gate);

// Applies every gate in order to |0>, angles for parameterized gates taken
// from `bindings` (length must equal the circuit's free-parameter count).
QubitState run_circuit(const Circuit& circuit, const std::vector<double>& bindings);

// <sigma_z> = |amp0|^2 - |amp1|^2, always in [-1, 1].
double expectation_z(const QubitState& state);

// P(measure |1>) = |amp1|^2, computed so prob_zero + prob_one == 1 exactly.
double prob_one(const QubitState& state);
double prob_zero(const QubitState& state);

struct ShotCounts {
    std::uint64_t n0 = 0;
    std::uint64_t n1 = 0;
};

// Measures `shots` times in the Z basis. Deterministic given the seed.
ShotCounts sample_shots(const QubitState& state, std::uint64_t shots, std::uint64_t seed);

// Exact derivative d<Z>/d(binding[slot]) via the two-point shift
// (E(theta + pi/2) - E(theta - pi/2)) / 2.
double param_shift_grad(const Circuit& circuit, const std::vector<double>& bindings, int slot,
                        const Observable& observable = {});

} // namespace qcnn::qsim
