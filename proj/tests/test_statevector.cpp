#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "qadv/circuit.hpp"
#include "qadv/statevector.hpp"
#include "helpers.hpp"

using namespace qadv;

namespace {

Mat2 mat(GateKind k, std::initializer_list<double> params = {}) {
    std::vector<double> p(params);
    return gate_matrix(k, p);
}

} // namespace

TEST_CASE("fresh states start in the all-zeros basis state") {
    for (int n = 1; n <= 8; ++n) {
        Statevector st(n);
        REQUIRE(st.size() == (std::size_t{1} << n));
        REQUIRE(std::abs(st[0] - cplx(1.0, 0.0)) == 0.0);
        REQUIRE(std::fabs(st.norm_sq() - 1.0) < 1e-15);
    }
    REQUIRE_THROWS_AS(Statevector(0), ConfigError);
    REQUIRE_THROWS_AS(Statevector(9), ConfigError);
}

TEST_CASE("qubit 0 is the most significant basis bit") {
    Statevector st(2);
    apply_pauli(st, 0, Pauli::X); // |00> -> |10>
    REQUIRE(std::abs(st[2] - cplx(1.0, 0.0)) < 1e-15);

    Statevector st2(2);
    apply_pauli(st2, 1, Pauli::X); // |00> -> |01>
    REQUIRE(std::abs(st2[1] - cplx(1.0, 0.0)) < 1e-15);
}

TEST_CASE("ry rotates |0> with the pinned sign convention") {
    // RY(pi)|0> = |1> exactly up to roundoff; <Z> after RY(theta) is cos(theta).
    Statevector st(1);
    apply_single(st, 0, mat(GateKind::RY, {M_PI}));
    REQUIRE(std::abs(st[0]) < 1e-15);
    REQUIRE(std::abs(st[1] - cplx(1.0, 0.0)) < 1e-15);

    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const double theta = rng.uniform(-2.0 * M_PI, 2.0 * M_PI);
        Statevector s(1);
        apply_single(s, 0, mat(GateKind::RY, {theta}));
        REQUIRE(std::fabs(expectation(s, 0, Pauli::Z) - std::cos(theta)) < 1e-12);
        REQUIRE(std::fabs(expectation(s, 0, Pauli::X) - std::sin(theta)) < 1e-12);
    }
}

TEST_CASE("h takes |0> to the +1 eigenstate of X") {
    Statevector st(1);
    apply_single(st, 0, mat(GateKind::H));
    REQUIRE(std::fabs(expectation(st, 0, Pauli::X) - 1.0) < 1e-12);
    REQUIRE(std::fabs(expectation(st, 0, Pauli::Z)) < 1e-12);
}

TEST_CASE("rz and u1 shift the relative phase of |+>") {
    Rng rng(6);
    for (int i = 0; i < 10; ++i) {
        const double theta = rng.uniform(-M_PI, M_PI);
        Statevector a(1);
        apply_single(a, 0, mat(GateKind::H));
        apply_single(a, 0, mat(GateKind::RZ, {theta}));
        REQUIRE(std::fabs(expectation(a, 0, Pauli::X) - std::cos(theta)) < 1e-12);
        REQUIRE(std::fabs(expectation(a, 0, Pauli::Y) - std::sin(theta)) < 1e-12);

        Statevector b(1);
        apply_single(b, 0, mat(GateKind::H));
        apply_single(b, 0, mat(GateKind::U1, {theta}));
        REQUIRE(std::fabs(expectation(b, 0, Pauli::X) - std::cos(theta)) < 1e-12);
    }
}

TEST_CASE("u3 equals rz-ry-rz composition up to global phase") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const double th = rng.uniform(-M_PI, M_PI);
        const double ph = rng.uniform(-M_PI, M_PI);
        const double la = rng.uniform(-M_PI, M_PI);
        const Mat2 u3 = mat(GateKind::U3, {th, ph, la});
        const Mat2 rz1 = mat(GateKind::RZ, {la});
        const Mat2 ry = mat(GateKind::RY, {th});
        const Mat2 rz2 = mat(GateKind::RZ, {ph});
        // rz2 * ry * rz1, then scale by e^{i(ph+la)/2}
        auto mul = [](const Mat2& a, const Mat2& b) {
            return Mat2{a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
                        a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
        };
        const cplx phase = std::exp(cplx(0.0, (ph + la) / 2.0));
        const Mat2 comp = mul(rz2, mul(ry, rz1));
        REQUIRE(std::abs(phase * comp.m00 - u3.m00) < 1e-12);
        REQUIRE(std::abs(phase * comp.m01 - u3.m01) < 1e-12);
        REQUIRE(std::abs(phase * comp.m10 - u3.m10) < 1e-12);
        REQUIRE(std::abs(phase * comp.m11 - u3.m11) < 1e-12);

        const Mat2 u2 = mat(GateKind::U2, {ph, la});
        const Mat2 u3_half = mat(GateKind::U3, {M_PI / 2.0, ph, la});
        REQUIRE(std::abs(u2.m00 - u3_half.m00) < 1e-15);
        REQUIRE(std::abs(u2.m01 - u3_half.m01) < 1e-15);
        REQUIRE(std::abs(u2.m10 - u3_half.m10) < 1e-15);
        REQUIRE(std::abs(u2.m11 - u3_half.m11) < 1e-15);
    }
}

TEST_CASE("h then cnot builds the bell state") {
    Statevector st(2);
    apply_single(st, 0, mat(GateKind::H));
    apply_controlled(st, 0, 1, mat(GateKind::CNOT));
    const double r = 1.0 / std::sqrt(2.0);
    REQUIRE(std::abs(st[0] - cplx(r, 0.0)) < 1e-15);
    REQUIRE(std::abs(st[1]) < 1e-15);
    REQUIRE(std::abs(st[2]) < 1e-15);
    REQUIRE(std::abs(st[3] - cplx(r, 0.0)) < 1e-15);
    REQUIRE(std::fabs(expectation(st, 0, Pauli::Z)) < 1e-12);
    REQUIRE(std::fabs(expectation(st, 1, Pauli::Z)) < 1e-12);
}

TEST_CASE("cnot only acts when the control qubit is set") {
    Statevector st(2); // |00>
    apply_controlled(st, 0, 1, mat(GateKind::CNOT));
    REQUIRE(std::abs(st[0] - cplx(1.0, 0.0)) < 1e-15);

    apply_pauli(st, 0, Pauli::X); // |10>
    apply_controlled(st, 0, 1, mat(GateKind::CNOT));
    REQUIRE(std::abs(st[3] - cplx(1.0, 0.0)) < 1e-15); // |11>
}

TEST_CASE("crx with the control unset leaves the state alone") {
    Statevector st(2);
    apply_single(st, 1, mat(GateKind::H)); // superposition on the target only
    const Statevector before = st;
    apply_controlled(st, 0, 1, mat(GateKind::CRX, {1.234}));
    for (std::size_t i = 0; i < st.size(); ++i) {
        REQUIRE(std::abs(st[i] - before[i]) < 1e-15);
    }

    // With the control set it is exactly RX on the target.
    Statevector a(2);
    apply_pauli(a, 0, Pauli::X);
    apply_controlled(a, 0, 1, mat(GateKind::CRX, {0.777}));
    Statevector b(1);
    apply_single(b, 0, mat(GateKind::RX, {0.777}));
    REQUIRE(std::abs(a[2] - b[0]) < 1e-15);
    REQUIRE(std::abs(a[3] - b[1]) < 1e-15);
}

TEST_CASE("gates act on their own wire only") {
    Statevector st(3);
    apply_single(st, 0, mat(GateKind::H));
    apply_single(st, 2, mat(GateKind::RY, {0.9}));
    REQUIRE(std::fabs(expectation(st, 0, Pauli::Z) - 0.0) < 1e-12);
    REQUIRE(std::fabs(expectation(st, 1, Pauli::Z) - 1.0) < 1e-12);
    REQUIRE(std::fabs(expectation(st, 2, Pauli::Z) - std::cos(0.9)) < 1e-12);
}

TEST_CASE("every gate followed by its adjoint restores the state") {
    Rng rng(8);
    for (int rep = 0; rep < 40; ++rep) {
        const auto rp = testutil::random_program(rng);
        Statevector st = run_statevector(rp.program, rp.features, rp.weights);
        const Statevector snapshot = st;
        for (const GateKind k :
             {GateKind::H, GateKind::RX, GateKind::RY, GateKind::RZ, GateKind::U1, GateKind::U2,
              GateKind::U3, GateKind::CNOT, GateKind::CZ, GateKind::CRX}) {
            GateOp op;
            op.kind = k;
            op.target = 0;
            if (is_controlled(k)) {
                if (rp.program.n_qubits < 2) {
                    continue;
                }
                op.control = 1;
            }
            std::vector<double> params;
            for (int s = 0; s < param_count(k); ++s) {
                params.push_back(rng.uniform(-M_PI, M_PI));
            }
            op.params.assign(params.size(), GateParam::constant(0.0));
            apply_gate(st, op, params);
            apply_gate_dagger(st, op, params);
            for (std::size_t i = 0; i < st.size(); ++i) {
                REQUIRE(std::abs(st[i] - snapshot[i]) < 1e-12);
            }
        }
    }
}

TEST_CASE("norm stays 1 after every gate of random programs") {
    Rng rng(9);
    for (int rep = 0; rep < 30; ++rep) {
        const auto rp = testutil::random_program(rng);
        Statevector st(rp.program.n_qubits);
        for (const GateOp& g : rp.program.gates) {
            apply_gate(st, g, resolve_gate_params(g, rp.features, rp.weights));
            REQUIRE(std::fabs(st.norm_sq() - 1.0) < 1e-12);
        }
        for (const Measurement& m : rp.program.measurements) {
            const double e = expectation(st, m.wire, m.basis);
            REQUIRE(std::fabs(e) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("wire bounds are checked") {
    Statevector st(2);
    REQUIRE_THROWS_AS(apply_single(st, 2, mat(GateKind::H)), ConfigError);
    REQUIRE_THROWS_AS(apply_single(st, -1, mat(GateKind::H)), ConfigError);
    REQUIRE_THROWS_AS(apply_controlled(st, 0, 0, mat(GateKind::CNOT)), ConfigError);
}
