#pragma once

#include <cstdint>
#include <vector>

#include "qadv/autodiff.hpp"
#include "qadv/circuit.hpp"
#include "qadv/rng.hpp"
#include "qadv/tensor.hpp"

namespace testutil {

// Scalar loss node: fixed-coefficient dot product. Keeps per-element
// gradients distinguishable, unlike a plain sum.
inline qadv::NodeId dot_node(qadv::Tape& t, qadv::NodeId x, const std::vector<double>& coeffs) {
    const qadv::Tensor& v = t.value(x);
    double s = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) {
        s += coeffs[i] * v[i];
    }
    return t.custom({x}, qadv::Tensor::scalar(s),
                    [shape = v.shape(), coeffs](const qadv::Tensor& up) {
                        qadv::Tensor g(shape);
                        for (std::size_t i = 0; i < g.numel(); ++i) {
                            g[i] = coeffs[i] * up[0];
                        }
                        return std::vector<qadv::Tensor>{g};
                    });
}

inline std::vector<double> random_coeffs(qadv::Rng& rng, std::size_t n) {
    std::vector<double> c(n);
    for (double& v : c) {
        v = rng.uniform(-1.0, 1.0);
    }
    return c;
}

inline qadv::Tensor random_tensor(qadv::Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                                  double hi = 1.0) {
    qadv::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t[i] = rng.uniform(lo, hi);
    }
    return t;
}

struct RandomProgramOptions {
    int min_qubits = 2;
    int max_qubits = 7;
    int max_layers = 4; // gate count is roughly layers * qubits
    // Keep trainable (feature/weight) slots off U2/U3, whose angles have no
    // parameter-shift rule; constants may still land anywhere.
    bool shift_safe_trainables = true;
};

// Random symbolic program plus matching feature/weight vectors. Feature and
// weight indices are handed out densely, with a reuse chance so shared
// parameters (multiple slots, one index) occur regularly.
struct RandomProgram {
    qadv::CircuitProgram program;
    std::vector<double> features;
    std::vector<double> weights;
};

inline RandomProgram random_program(qadv::Rng& rng, const RandomProgramOptions& opt = {}) {
    using qadv::GateKind;
    using qadv::GateParam;
    using qadv::ParamRole;

    const int n = opt.min_qubits +
                  static_cast<int>(rng.integer(
                      static_cast<std::uint64_t>(opt.max_qubits - opt.min_qubits + 1)));
    const int layers = 1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(opt.max_layers)));
    const int gate_count = layers * n;

    const std::vector<GateKind> single_kinds = {GateKind::H,  GateKind::RX, GateKind::RY,
                                                GateKind::RZ, GateKind::U1, GateKind::U2,
                                                GateKind::U3};
    const std::vector<GateKind> two_kinds = {GateKind::CNOT, GateKind::CZ, GateKind::CRX};

    RandomProgram out;
    out.program.n_qubits = n;
    std::size_t next_feature = 0, next_weight = 0;

    for (int g = 0; g < gate_count; ++g) {
        qadv::GateOp op;
        const bool two = n >= 2 && rng.uniform() < 0.3;
        if (two) {
            op.kind = two_kinds[rng.integer(two_kinds.size())];
            op.control = static_cast<int>(rng.integer(n));
            do {
                op.target = static_cast<int>(rng.integer(n));
            } while (op.target == op.control);
        } else {
            op.kind = single_kinds[rng.integer(single_kinds.size())];
            op.target = static_cast<int>(rng.integer(n));
        }
        const bool trainable_ok =
            !opt.shift_safe_trainables || (op.kind != GateKind::U2 && op.kind != GateKind::U3);
        for (int s = 0; s < qadv::param_count(op.kind); ++s) {
            const double dice = rng.uniform();
            if (!trainable_ok || dice < 0.4) {
                op.params.push_back(GateParam::constant(rng.uniform(-M_PI, M_PI)));
            } else if (dice < 0.7) {
                // feature slot; reuse an existing index 30% of the time
                std::size_t idx;
                if (next_feature > 0 && rng.uniform() < 0.3) {
                    idx = rng.integer(next_feature);
                } else {
                    idx = next_feature++;
                }
                op.params.push_back(GateParam::feature(idx));
            } else {
                std::size_t idx;
                if (next_weight > 0 && rng.uniform() < 0.3) {
                    idx = rng.integer(next_weight);
                } else {
                    idx = next_weight++;
                }
                op.params.push_back(GateParam::weight(idx));
            }
        }
        out.program.gates.push_back(std::move(op));
    }

    for (int w = 0; w < n; ++w) {
        if (rng.uniform() < 0.6) {
            const double dice = rng.uniform();
            const qadv::Pauli basis =
                dice < 0.34 ? qadv::Pauli::X : (dice < 0.67 ? qadv::Pauli::Y : qadv::Pauli::Z);
            out.program.measurements.push_back({basis, w});
        }
    }
    if (out.program.measurements.empty()) {
        out.program.measurements.push_back({qadv::Pauli::Z, 0});
    }

    out.features.resize(next_feature);
    for (double& f : out.features) {
        f = rng.uniform(-M_PI, M_PI);
    }
    out.weights.resize(next_weight);
    for (double& w : out.weights) {
        w = rng.uniform(-M_PI, M_PI);
    }
    out.program.validate();
    return out;
}

} // namespace testutil
