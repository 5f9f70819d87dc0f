#include "qcnn/qsim.hpp"

#include <cmath>
#include <string>

#include "qcnn/error.hpp"
#include "qcnn/rng.hpp"

namespace qcnn::qsim {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

} // namespace

GateMatrix gate_matrix(const Gate& gate, double bound_angle) {
    switch (gate.kind) {
        case GateKind::Hadamard:
            return {std::complex<double>(kInvSqrt2, 0.0), std::complex<double>(kInvSqrt2, 0.0),
                    std::complex<double>(kInvSqrt2, 0.0), std::complex<double>(-kInvSqrt2, 0.0)};
        case GateKind::Rx: {
            const double c = std::cos(bound_angle / 2.0);
            const double s = std::sin(bound_angle / 2.0);
            return {std::complex<double>(c, 0.0), std::complex<double>(0.0, -s),
                    std::complex<double>(0.0, -s), std::complex<double>(c, 0.0)};
        }
        case GateKind::Ry: {
            // [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]
            const double c = std::cos(bound_angle / 2.0);
            const double s = std::sin(bound_angle / 2.0);
            return {std::complex<double>(c, 0.0), std::complex<double>(-s, 0.0),
                    std::complex<double>(s, 0.0), std::complex<double>(c, 0.0)};
        }
        case GateKind::Rz: {
            // diag(e^{-it/2}, e^{+it/2})
            const std::complex<double> e0 = std::polar(1.0, -bound_angle / 2.0);
            const std::complex<double> e1 = std::polar(1.0, bound_angle / 2.0);
            return {e0, std::complex<double>(0.0, 0.0), std::complex<double>(0.0, 0.0), e1};
        }
    }
    throw Error("unknown gate kind");
}

Circuit::Circuit(std::vector<Gate> g) : gates(std::move(g)) {
    // Slots must be dense 0..n-1; duplicates share a binding.
    int max_slot = -1;
    for (const auto& gate : gates) {
        if (gate.slot) max_slot = std::max(max_slot, *gate.slot);
    }
    free_parameters = max_slot + 1;
    std::vector<bool> seen(static_cast<std::size_t>(free_parameters), false);
    for (const auto& gate : gates) {
        if (gate.slot) {
            if (*gate.slot < 0) throw ArityError("negative parameter slot");
            seen[static_cast<std::size_t>(*gate.slot)] = true;
        }
    }
    for (int i = 0; i < free_parameters; ++i) {
        if (!seen[static_cast<std::size_t>(i)]) {
            throw ArityError("parameter slots are not dense: slot " + std::to_string(i) +
                             " is unused");
        }
    }
}

Circuit Circuit::h_ry() {
    return Circuit({Gate::hadamard(), Gate::ry_param(0)});
}

QubitState apply_gate(const QubitState& state, const Gate& gate) {
    const GateMatrix u = gate_matrix(gate, gate.angle);
    QubitState out;
    out.amp0 = u[0] * state.amp0 + u[1] * state.amp1;
    out.amp1 = u[2] * state.amp0 + u[3] * state.amp1;
    return out;
}

QubitState run_circuit(const Circuit& circuit, const std::vector<double>& bindings) {
    if (static_cast<int>(bindings.size()) != circuit.free_parameters) {
        throw ArityError("circuit expects " + std::to_string(circuit.free_parameters) +
                         " bindings, got " + std::to_string(bindings.size()));
    }
    QubitState state; // |0>
    for (const auto& gate : circuit.gates) {
        Gate bound = gate;
        if (gate.slot) bound.angle = bindings[static_cast<std::size_t>(*gate.slot)];
        state = apply_gate(state, bound);
    }
    return state;
}

double expectation_z(const QubitState& state) {
    return std::norm(state.amp0) - std::norm(state.amp1);
}

double prob_one(const QubitState& state) {
    return std::norm(state.amp1);
}

double prob_zero(const QubitState& state) {
    return 1.0 - prob_one(state);
}

ShotCounts sample_shots(const QubitState& state, std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1) throw ContractError("sample_shots requires shots >= 1");
    const double p1 = prob_one(state);
    Rng rng(seed);
    ShotCounts counts;
    for (std::uint64_t i = 0; i < shots; ++i) {
        if (rng.uniform() < p1) {
            ++counts.n1;
        } else {
            ++counts.n0;
        }
    }
    return counts;
}

double param_shift_grad(const Circuit& circuit, const std::vector<double>& bindings, int slot,
                        const Observable& observable) {
    (void)observable; // PauliZ is the only kind
    if (slot < 0 || slot >= circuit.free_parameters) {
        throw ArityError("parameter slot " + std::to_string(slot) + " out of range, circuit has " +
                         std::to_string(circuit.free_parameters));
    }
    for (const auto& gate : circuit.gates) {
        if (gate.slot && *gate.slot == slot && !gate.is_rotation()) {
            throw ContractError("parameter-shift rule is unsupported for non-rotation gates");
        }
    }
    constexpr double kHalfPi = 1.57079632679489661923;
    std::vector<double> plus = bindings;
    std::vector<double> minus = bindings;
    plus[static_cast<std::size_t>(slot)] += kHalfPi;
    minus[static_cast<std::size_t>(slot)] -= kHalfPi;
    const double e_plus = expectation_z(run_circuit(circuit, plus));
    const double e_minus = expectation_z(run_circuit(circuit, minus));
    return (e_plus - e_minus) / 2.0;
}

} // namespace qcnn::qsim
