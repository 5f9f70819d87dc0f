#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "qcnn/error.hpp"
#include "qcnn/qsim.hpp"
#include "qcnn/rng.hpp"

using namespace qcnn;
using namespace qcnn::qsim;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent oracle: d<Z>/dtheta by central differences on the exact
// simulator, h = 1e-5.
double fd_expectation_grad(const Circuit& circuit, std::vector<double> bindings, int slot,
                           double h = 1e-5) {
    bindings[static_cast<std::size_t>(slot)] += h;
    const double e_plus = expectation_z(run_circuit(circuit, bindings));
    bindings[static_cast<std::size_t>(slot)] -= 2.0 * h;
    const double e_minus = expectation_z(run_circuit(circuit, bindings));
    return (e_plus - e_minus) / (2.0 * h);
}

std::array<std::complex<double>, 4> dagger_times_self(const GateMatrix& u) {
    // (U^H U) row-major
    std::array<std::complex<double>, 4> r;
    r[0] = std::conj(u[0]) * u[0] + std::conj(u[2]) * u[2];
    r[1] = std::conj(u[0]) * u[1] + std::conj(u[2]) * u[3];
    r[2] = std::conj(u[1]) * u[0] + std::conj(u[3]) * u[2];
    r[3] = std::conj(u[1]) * u[1] + std::conj(u[3]) * u[3];
    return r;
}

} // namespace

TEST_CASE("hadamard on |0> gives the equal superposition") {
    const QubitState s = apply_gate(QubitState{}, Gate::hadamard());
    CHECK(std::abs(s.amp0.real() - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s.amp1.real() - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s.amp0.imag()) < 1e-15);
    CHECK(std::abs(s.amp1.imag()) < 1e-15);
}

TEST_CASE("ry(pi) maps |0> to |1>") {
    const QubitState s = apply_gate(QubitState{}, Gate::ry(kPi));
    CHECK(std::abs(s.amp0) < 1e-12);
    CHECK(std::abs(s.amp1 - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("rz only changes phase on |0>") {
    for (double phi : {0.1, 1.0, -2.5, kPi}) {
        const QubitState s = apply_gate(QubitState{}, Gate::rz(phi));
        CHECK(std::norm(s.amp0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::norm(s.amp1) == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("gate matrices are unitary") {
    for (const Gate& g : {Gate::hadamard(), Gate::rx(0.7), Gate::ry(-1.3), Gate::rz(2.9)}) {
        const auto uu = dagger_times_self(gate_matrix(g, g.angle));
        CHECK(std::abs(uu[0] - 1.0) < 1e-12);
        CHECK(std::abs(uu[1]) < 1e-12);
        CHECK(std::abs(uu[2]) < 1e-12);
        CHECK(std::abs(uu[3] - 1.0) < 1e-12);
    }
}

TEST_CASE("run_circuit: H then Ry(0) leaves the superposition") {
    const QubitState s = run_circuit(Circuit::h_ry(), {0.0});
    CHECK(std::abs(s.amp0.real() - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(s.amp1.real() - 1.0 / std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("run_circuit: H then Ry(pi/2) lands on |1>") {
    // Ry(pi/2) * H|0> = (1/sqrt2)[[1,-1],[1,1]] * (1,1)/sqrt2 = (0, 1)
    const QubitState s = run_circuit(Circuit::h_ry(), {kPi / 2.0});
    CHECK(std::abs(s.amp0) < 1e-12);
    CHECK(std::abs(s.amp1 - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("empty circuit returns |0>") {
    const QubitState s = run_circuit(Circuit(std::vector<Gate>{}), {});
    CHECK(s.amp0 == std::complex<double>(1.0, 0.0));
    CHECK(s.amp1 == std::complex<double>(0.0, 0.0));
}

TEST_CASE("binding count mismatch is an arity error") {
    CHECK_THROWS_AS(run_circuit(Circuit::h_ry(), {}), ArityError);
    CHECK_THROWS_AS(run_circuit(Circuit::h_ry(), {0.1, 0.2}), ArityError);
}

TEST_CASE("expectation_z basics") {
    CHECK(expectation_z(QubitState{}) == 1.0);
    const QubitState plus = apply_gate(QubitState{}, Gate::hadamard());
    CHECK(std::abs(expectation_z(plus)) < 1e-15);
}

TEST_CASE("analytic oracle: <Z> of H->Ry(theta) equals -sin(theta) on a 100-point grid") {
    const Circuit c = Circuit::h_ry();
    for (int i = 0; i < 100; ++i) {
        const double theta = -kPi + 2.0 * kPi * i / 99.0;
        const double e = expectation_z(run_circuit(c, {theta}));
        CHECK(std::abs(e + std::sin(theta)) < 1e-12);
    }
}

TEST_CASE("prob_one basics and complement") {
    CHECK(prob_one(QubitState{}) == 0.0);
    const QubitState plus = apply_gate(QubitState{}, Gate::hadamard());
    CHECK(prob_one(plus) == doctest::Approx(0.5).epsilon(1e-15));

    const Circuit c = Circuit::h_ry();
    for (int i = 0; i < 100; ++i) {
        const double theta = -kPi + 2.0 * kPi * i / 99.0;
        const QubitState s = run_circuit(c, {theta});
        CHECK(std::abs(prob_one(s) - (1.0 + std::sin(theta)) / 2.0) < 1e-12);
        CHECK(prob_zero(s) + prob_one(s) == 1.0); // exact, by complement
    }
}

TEST_CASE("norm preserved by random gate sequences") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        QubitState s;
        for (int g = 0; g < 12; ++g) {
            const double angle = rng.uniform(-kPi, kPi);
            switch (rng.below(4)) {
                case 0: s = apply_gate(s, Gate::hadamard()); break;
                case 1: s = apply_gate(s, Gate::rx(angle)); break;
                case 2: s = apply_gate(s, Gate::ry(angle)); break;
                default: s = apply_gate(s, Gate::rz(angle)); break;
            }
        }
        CHECK(std::abs(s.norm_sq() - 1.0) < 1e-12);
        CHECK(expectation_z(s) >= -1.0 - 1e-12);
        CHECK(expectation_z(s) <= 1.0 + 1e-12);
    }
}

TEST_CASE("sample_shots: |0> always measures 0") {
    const ShotCounts c = sample_shots(QubitState{}, 100, 123);
    CHECK(c.n0 == 100);
    CHECK(c.n1 == 0);
}

TEST_CASE("sample_shots: superposition frequency near one half") {
    const QubitState plus = apply_gate(QubitState{}, Gate::hadamard());
    const ShotCounts c = sample_shots(plus, 10000, 42);
    CHECK(c.n0 + c.n1 == 10000);
    const double f1 = static_cast<double>(c.n1) / 10000.0;
    CHECK(f1 > 0.5 - 0.015); // binomial 3-sigma bound
    CHECK(f1 < 0.5 + 0.015);
}

TEST_CASE("sample_shots is deterministic given the seed") {
    const QubitState s = run_circuit(Circuit::h_ry(), {0.3});
    const ShotCounts a = sample_shots(s, 5000, 99);
    const ShotCounts b = sample_shots(s, 5000, 99);
    CHECK(a.n0 == b.n0);
    CHECK(a.n1 == b.n1);
}

TEST_CASE("shot estimates tighten as shots grow") {
    const QubitState s = run_circuit(Circuit::h_ry(), {0.4});
    const double exact = prob_one(s);
    double err_small = 0.0;
    double err_large = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ShotCounts a = sample_shots(s, 100, seed);
        const ShotCounts b = sample_shots(s, 10000, seed + 1000);
        err_small += std::abs(static_cast<double>(a.n1) / 100.0 - exact);
        err_large += std::abs(static_cast<double>(b.n1) / 10000.0 - exact);
    }
    CHECK(err_large < err_small);
}

TEST_CASE("param_shift_grad matches the analytic derivative at pinned points") {
    const Circuit c = Circuit::h_ry();
    // d(-sin theta)/dtheta = -cos theta
    CHECK(param_shift_grad(c, {0.0}, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(param_shift_grad(c, {kPi / 2.0}, 0)) < 1e-12);
}

TEST_CASE("param_shift_grad agrees with central finite differences") {
    const Circuit c = Circuit::h_ry();
    Rng rng(11);
    for (int i = 0; i < 40; ++i) {
        const double theta = rng.uniform(-kPi, kPi);
        const double shift = param_shift_grad(c, {theta}, 0);
        const double fd = fd_expectation_grad(c, {theta}, 0);
        CHECK(std::abs(shift - fd) < 1e-8);
    }
    // also on a richer circuit with two free angles
    const Circuit two(
        {Gate::hadamard(), Gate::ry_param(0), Gate::rz(0.7), Gate::rx_param(1)});
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> b = {rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
        for (int slot = 0; slot < 2; ++slot) {
            CHECK(std::abs(param_shift_grad(two, b, slot) - fd_expectation_grad(two, b, slot)) <
                  1e-8);
        }
    }
}

TEST_CASE("param_shift_grad rejects slots bound to non-rotation gates") {
    Gate h = Gate::hadamard();
    h.slot = 0;
    const Circuit c({h, Gate::ry_param(1)});
    CHECK_THROWS_AS(param_shift_grad(c, {0.0, 0.0}, 0), ContractError);
    CHECK_THROWS_AS(param_shift_grad(c, {0.0, 0.0}, 5), ArityError);
}
