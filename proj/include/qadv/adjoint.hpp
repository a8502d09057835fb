#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qadv/circuit.hpp"
#include "qadv/errors.hpp"
#include "qadv/statevector.hpp"

namespace qadv {

// Jacobians of every measured expectation with respect to every feature and
// every weight. Rows follow program measurement order.
struct CircuitJacobians {
    std::vector<std::vector<double>> features; // [measurement][feature]
    std::vector<std::vector<double>> weights;  // [measurement][weight]
};

// Single-sweep reverse differentiation of the whole program. One forward pass
// builds |psi>; the backward pass undoes gates one at a time, keeping
// lambda_k = (gates after i)^dagger P_k |psi> so each parameter derivative is
// d<P_k>/dtheta = 2 Re <lambda_k| dU_i |phi_i> with phi_i the pre-gate state.
// Parameters appearing in several slots accumulate across occurrences.
inline CircuitJacobians adjoint_gradients(const CircuitProgram& prog,
                                          std::span<const double> features,
                                          std::span<const double> weights) {
    prog.validate();
    check_bindings(prog, features, weights);

    Statevector psi(prog.n_qubits);
    for (const GateOp& g : prog.gates) {
        apply_gate(psi, g, resolve_gate_params(g, features, weights));
    }

    const std::size_t M = prog.measurements.size();
    std::vector<Statevector> lambda;
    lambda.reserve(M);
    for (const Measurement& m : prog.measurements) {
        Statevector l = psi;
        apply_pauli(l, m.wire, m.basis);
        lambda.push_back(std::move(l));
    }

    CircuitJacobians jac;
    jac.features.assign(M, std::vector<double>(prog.feature_count(), 0.0));
    jac.weights.assign(M, std::vector<double>(prog.weight_count(), 0.0));

    for (std::size_t gi = prog.gates.size(); gi-- > 0;) {
        const GateOp& g = prog.gates[gi];
        const std::vector<double> p = resolve_gate_params(g, features, weights);
        apply_gate_dagger(psi, g, p);
        for (std::size_t slot = 0; slot < g.params.size(); ++slot) {
            const GateParam& gp = g.params[slot];
            if (gp.role == ParamRole::Constant) {
                continue;
            }
            Statevector dpsi = psi;
            const Mat2 d = gate_param_derivative(g.kind, p, slot);
            if (is_controlled(g.kind)) {
                apply_controlled(dpsi, g.control, g.target, d, /*zero_control_block=*/true);
            } else {
                apply_single(dpsi, g.target, d);
            }
            for (std::size_t k = 0; k < M; ++k) {
                const double val = 2.0 * inner_product(lambda[k], dpsi).real();
                if (gp.role == ParamRole::Feature) {
                    jac.features[k][gp.index] += val;
                } else {
                    jac.weights[k][gp.index] += val;
                }
            }
        }
        for (Statevector& l : lambda) {
            apply_gate_dagger(l, g, p);
        }
    }
    return jac;
}

namespace detail {

inline std::vector<double> run_with_slot_shift(const CircuitProgram& prog,
                                               std::span<const double> features,
                                               std::span<const double> weights,
                                               std::size_t gate_idx, std::size_t slot,
                                               double delta) {
    Statevector st(prog.n_qubits);
    for (std::size_t gi = 0; gi < prog.gates.size(); ++gi) {
        std::vector<double> p = resolve_gate_params(prog.gates[gi], features, weights);
        if (gi == gate_idx) {
            p[slot] += delta;
        }
        apply_gate(st, prog.gates[gi], p);
    }
    std::vector<double> out;
    out.reserve(prog.measurements.size());
    for (const Measurement& m : prog.measurements) {
        out.push_back(expectation(st, m.wire, m.basis));
    }
    return out;
}

} // namespace detail

// Exact gradient of every measured expectation with respect to one feature or
// weight, evaluated through shifted circuit executions only.
//
// RX/RY/RZ/U1 angles use the two-point rule (E(+pi/2) - E(-pi/2)) / 2. CRX
// needs four points because its generator has eigenvalues {0, +-1/2}, so the
// expectation mixes theta/2 and theta frequencies:
//   dE = c+ [E(+pi/2) - E(-pi/2)] - c- [E(+3pi/2) - E(-3pi/2)],
//   c+- = (sqrt(2) +- 1) / (4 sqrt(2)).
// U2/U3 slots have no shift rule here; they raise OracleUnsupportedError and
// callers fall back to finite_difference_gradient.
inline std::vector<double> parameter_shift_gradient(const CircuitProgram& prog,
                                                    std::span<const double> features,
                                                    std::span<const double> weights,
                                                    ParamRole role, std::size_t index) {
    prog.validate();
    check_bindings(prog, features, weights);
    if (role == ParamRole::Constant) {
        throw InputError("parameter_shift_gradient: constants are not differentiable inputs");
    }
    const std::size_t total =
        role == ParamRole::Feature ? prog.feature_count() : prog.weight_count();
    if (index >= total) {
        throw InputError("parameter_shift_gradient: index " + std::to_string(index) +
                         " out of range (program has " + std::to_string(total) + ")");
    }
    const std::size_t M = prog.measurements.size();
    std::vector<double> grad(M, 0.0);
    for (std::size_t gi = 0; gi < prog.gates.size(); ++gi) {
        const GateOp& g = prog.gates[gi];
        for (std::size_t slot = 0; slot < g.params.size(); ++slot) {
            const GateParam& gp = g.params[slot];
            if (gp.role != role || gp.index != index) {
                continue;
            }
            switch (g.kind) {
                case GateKind::RX:
                case GateKind::RY:
                case GateKind::RZ:
                case GateKind::U1: {
                    const auto ep = detail::run_with_slot_shift(prog, features, weights, gi,
                                                                slot, M_PI / 2.0);
                    const auto em = detail::run_with_slot_shift(prog, features, weights, gi,
                                                                slot, -M_PI / 2.0);
                    for (std::size_t k = 0; k < M; ++k) {
                        grad[k] += (ep[k] - em[k]) / 2.0;
                    }
                    break;
                }
                case GateKind::CRX: {
                    const double s2 = std::sqrt(2.0);
                    const double cp = (s2 + 1.0) / (4.0 * s2);
                    const double cm = (s2 - 1.0) / (4.0 * s2);
                    const auto e1 = detail::run_with_slot_shift(prog, features, weights, gi,
                                                                slot, M_PI / 2.0);
                    const auto e2 = detail::run_with_slot_shift(prog, features, weights, gi,
                                                                slot, -M_PI / 2.0);
                    const auto e3 = detail::run_with_slot_shift(prog, features, weights, gi,
                                                                slot, 3.0 * M_PI / 2.0);
                    const auto e4 = detail::run_with_slot_shift(prog, features, weights, gi,
                                                                slot, -3.0 * M_PI / 2.0);
                    for (std::size_t k = 0; k < M; ++k) {
                        grad[k] += cp * (e1[k] - e2[k]) - cm * (e3[k] - e4[k]);
                    }
                    break;
                }
                default:
                    throw OracleUnsupportedError(
                        "no parameter-shift rule for " + gate_name(g.kind) +
                        " (gate " + std::to_string(gi) + ", slot " + std::to_string(slot) +
                        "); use finite_difference_gradient");
            }
        }
    }
    return grad;
}

// Central differences on the bound feature/weight vectors. O(h^2) accurate;
// this is the fallback oracle for gates without a shift rule and the
// cross-check for everything else.
inline std::vector<double> finite_difference_gradient(const CircuitProgram& prog,
                                                      std::span<const double> features,
                                                      std::span<const double> weights,
                                                      ParamRole role, std::size_t index,
                                                      double h = 1e-6) {
    prog.validate();
    check_bindings(prog, features, weights);
    if (role == ParamRole::Constant) {
        throw InputError("finite_difference_gradient: constants are not differentiable inputs");
    }
    std::vector<double> f(features.begin(), features.end());
    std::vector<double> w(weights.begin(), weights.end());
    std::vector<double>& v = role == ParamRole::Feature ? f : w;
    if (index >= v.size()) {
        throw InputError("finite_difference_gradient: index " + std::to_string(index) +
                         " out of range (program has " + std::to_string(v.size()) + ")");
    }
    const double saved = v[index];
    v[index] = saved + h;
    const std::vector<double> hi = run_circuit(prog, f, w);
    v[index] = saved - h;
    const std::vector<double> lo = run_circuit(prog, f, w);
    v[index] = saved;
    std::vector<double> grad(hi.size());
    for (std::size_t k = 0; k < hi.size(); ++k) {
        grad[k] = (hi[k] - lo[k]) / (2.0 * h);
    }
    return grad;
}

} // namespace qadv
