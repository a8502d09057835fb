#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qadv/adjoint.hpp"
#include "qadv/autodiff.hpp"
#include "qadv/circuit.hpp"
#include "qadv/errors.hpp"
#include "qadv/rng.hpp"
#include "qadv/tensor.hpp"

namespace qadv {

// How classical features enter the circuit. All schemes take one feature per
// wire; angles are produced upstream by embedding_angle().
enum class EmbeddingScheme {
    HThenRY, // H on every wire, then RY(angle_i)
    RXOnly,  // RX(angle_i) straight onto |0>
    U3Pair,  // U3(angle_i, angle_i, 0): the feature drives two slots
};

enum class EntanglerPattern {
    RingCnot,  // CNOT w -> (w+1) mod n
    LadderCz,  // CZ (w, w+1) for w = 0..n-2
    LadderCrx, // CRX(pi/2) (w, w+1) for w = 0..n-2
};

enum class RotationGate { RY, RZ, U3 };

inline int rotation_param_count(RotationGate r) { return r == RotationGate::U3 ? 3 : 1; }

inline std::string embedding_name(EmbeddingScheme e) {
    switch (e) {
        case EmbeddingScheme::HThenRY: return "h-then-ry";
        case EmbeddingScheme::RXOnly: return "rx-only";
        case EmbeddingScheme::U3Pair: return "u3-pair";
    }
    return "?";
}

inline std::string entangler_name(EntanglerPattern e) {
    switch (e) {
        case EntanglerPattern::RingCnot: return "ring-cnot";
        case EntanglerPattern::LadderCz: return "ladder-cz";
        case EntanglerPattern::LadderCrx: return "ladder-crx";
    }
    return "?";
}

inline std::string rotation_name(RotationGate r) {
    switch (r) {
        case RotationGate::RY: return "ry";
        case RotationGate::RZ: return "rz";
        case RotationGate::U3: return "u3";
    }
    return "?";
}

// Squash an unbounded feature into a rotation angle in (-pi/2, pi/2).
inline double embedding_angle(double f) { return (M_PI / 2.0) * std::tanh(f); }

inline double embedding_angle_grad(double f) {
    const double t = std::tanh(f);
    return (M_PI / 2.0) * (1.0 - t * t);
}

// Structure of one variational circuit: feature embedding, `depth` repeats of
// (rotation layer + entangler layer), Z measurement on every wire.
struct CircuitTemplate {
    int id = 0; // 0 = ad hoc; 1..6 = registry entries
    int n_qubits = 4;
    int depth = 1;
    EmbeddingScheme embedding = EmbeddingScheme::HThenRY;
    EntanglerPattern entangler = EntanglerPattern::RingCnot;
    RotationGate rotation = RotationGate::RY;

    std::size_t weight_count() const {
        return static_cast<std::size_t>(depth) * static_cast<std::size_t>(n_qubits) *
               static_cast<std::size_t>(rotation_param_count(rotation));
    }

    std::size_t feature_count() const { return static_cast<std::size_t>(n_qubits); }
};

// Feature-embedding gates only, with angle slots bound to feature indices.
inline std::vector<GateOp> embedding_gates(const CircuitTemplate& t) {
    std::vector<GateOp> gates;
    switch (t.embedding) {
        case EmbeddingScheme::HThenRY:
            for (int w = 0; w < t.n_qubits; ++w) {
                gates.push_back({GateKind::H, w, -1, {}});
            }
            for (int w = 0; w < t.n_qubits; ++w) {
                gates.push_back({GateKind::RY, w, -1, {GateParam::feature(w)}});
            }
            break;
        case EmbeddingScheme::RXOnly:
            for (int w = 0; w < t.n_qubits; ++w) {
                gates.push_back({GateKind::RX, w, -1, {GateParam::feature(w)}});
            }
            break;
        case EmbeddingScheme::U3Pair:
            for (int w = 0; w < t.n_qubits; ++w) {
                gates.push_back({GateKind::U3, w, -1,
                                 {GateParam::feature(w), GateParam::feature(w),
                                  GateParam::constant(0.0)}});
            }
            break;
    }
    return gates;
}

// Same gates with literal squashed angles instead of feature slots; handy for
// inspecting what a concrete input does to the circuit.
inline std::vector<GateOp> embed_features(const CircuitTemplate& t,
                                          std::span<const double> features) {
    if (features.size() != t.feature_count()) {
        throw DimensionError("embed_features: template takes " +
                             std::to_string(t.feature_count()) + " features, got " +
                             std::to_string(features.size()));
    }
    std::vector<GateOp> gates = embedding_gates(t);
    for (GateOp& g : gates) {
        for (GateParam& p : g.params) {
            if (p.role == ParamRole::Feature) {
                p = GateParam::constant(embedding_angle(features[p.index]));
            }
        }
    }
    return gates;
}

inline CircuitProgram expand_template(const CircuitTemplate& t) {
    if (t.n_qubits < 1 || t.n_qubits > 8) {
        throw ConfigError("template needs 1..8 qubits, got " + std::to_string(t.n_qubits));
    }
    if (t.depth < 0) {
        throw ConfigError("template depth must be >= 0, got " + std::to_string(t.depth));
    }
    CircuitProgram prog;
    prog.n_qubits = t.n_qubits;
    prog.gates = embedding_gates(t);
    std::size_t widx = 0;
    for (int layer = 0; layer < t.depth; ++layer) {
        for (int w = 0; w < t.n_qubits; ++w) {
            switch (t.rotation) {
                case RotationGate::RY:
                    prog.gates.push_back({GateKind::RY, w, -1, {GateParam::weight(widx++)}});
                    break;
                case RotationGate::RZ:
                    prog.gates.push_back({GateKind::RZ, w, -1, {GateParam::weight(widx++)}});
                    break;
                case RotationGate::U3: {
                    GateParam a = GateParam::weight(widx++);
                    GateParam b = GateParam::weight(widx++);
                    GateParam c = GateParam::weight(widx++);
                    prog.gates.push_back({GateKind::U3, w, -1, {a, b, c}});
                    break;
                }
            }
        }
        // A 1-qubit template has nothing to entangle; skip the layer.
        if (t.n_qubits >= 2) {
            switch (t.entangler) {
                case EntanglerPattern::RingCnot:
                    for (int w = 0; w < t.n_qubits; ++w) {
                        prog.gates.push_back({GateKind::CNOT, (w + 1) % t.n_qubits, w, {}});
                    }
                    break;
                case EntanglerPattern::LadderCz:
                    for (int w = 0; w + 1 < t.n_qubits; ++w) {
                        prog.gates.push_back({GateKind::CZ, w + 1, w, {}});
                    }
                    break;
                case EntanglerPattern::LadderCrx:
                    for (int w = 0; w + 1 < t.n_qubits; ++w) {
                        prog.gates.push_back(
                            {GateKind::CRX, w + 1, w, {GateParam::constant(M_PI / 2.0)}});
                    }
                    break;
            }
        }
    }
    for (int w = 0; w < t.n_qubits; ++w) {
        prog.measurements.push_back({Pauli::Z, w});
    }
    prog.validate();
    return prog;
}

// Fixed catalog of the six circuits the benchmark reports on. Qubit counts
// 4,5,5,5,7,4; depth and gate choices give a spread of expressibility scores
// (KL vs Haar at S=5000/B=75, measured by this library's own estimator):
//   1: 4q depth 1, RY rotations, ring CNOT, H+RY embed      (~0.69)
//   2: 5q depth 1, RY rotations, CZ ladder, RX embed        (~0.75)
//   3: 5q depth 1, RY rotations, CRX ladder, H+RY embed     (~0.68)
//   4: 5q depth 2, RY rotations, ring CNOT, H+RY embed      (~0.20)
//   5: 7q depth 1, RY rotations, CZ ladder, H+RY embed      (~0.49)
//   6: 4q depth 3, U3 rotations, ring CNOT, U3-pair embed   (~0.004)
inline CircuitTemplate registry(int id) {
    switch (id) {
        case 1:
            return {1, 4, 1, EmbeddingScheme::HThenRY, EntanglerPattern::RingCnot,
                    RotationGate::RY};
        case 2:
            return {2, 5, 1, EmbeddingScheme::RXOnly, EntanglerPattern::LadderCz,
                    RotationGate::RY};
        case 3:
            return {3, 5, 1, EmbeddingScheme::HThenRY, EntanglerPattern::LadderCrx,
                    RotationGate::RY};
        case 4:
            return {4, 5, 2, EmbeddingScheme::HThenRY, EntanglerPattern::RingCnot,
                    RotationGate::RY};
        case 5:
            return {5, 7, 1, EmbeddingScheme::HThenRY, EntanglerPattern::LadderCz,
                    RotationGate::RY};
        case 6:
            return {6, 4, 3, EmbeddingScheme::U3Pair, EntanglerPattern::RingCnot,
                    RotationGate::U3};
        default:
            throw ConfigError("template registry has entries 1..6, got " + std::to_string(id));
    }
}

// Trainable quantum layer: a template, its expanded program, and the weight
// vector. Weights start uniform in [-0.1, 0.1].
struct QnnLayer {
    CircuitTemplate tmpl;
    CircuitProgram program;
    Tensor weights;
};

inline QnnLayer make_qnn_layer(const CircuitTemplate& t, Rng& rng) {
    QnnLayer layer{t, expand_template(t), Tensor({t.weight_count()})};
    for (std::size_t i = 0; i < layer.weights.numel(); ++i) {
        layer.weights[i] = rng.uniform(-0.1, 0.1);
    }
    return layer;
}

// Runs the program on squashed features and registers the adjoint-method
// Jacobian as the backward rule. Output is the vector of Z expectations.
inline NodeId qnn_forward(Tape& tape, NodeId features_id, NodeId weights_id,
                          const CircuitProgram& program) {
    const Tensor& f = tape.value(features_id);
    const Tensor& w = tape.value(weights_id);
    if (f.numel() != program.feature_count()) {
        throw DimensionError("qnn_forward: program takes " +
                             std::to_string(program.feature_count()) + " features, got " +
                             std::to_string(f.numel()));
    }
    if (w.numel() != program.weight_count()) {
        throw DimensionError("qnn_forward: program takes " +
                             std::to_string(program.weight_count()) + " weights, got " +
                             std::to_string(w.numel()));
    }
    std::vector<double> raw(f.raw());
    std::vector<double> angles(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        angles[i] = embedding_angle(raw[i]);
    }
    std::vector<double> wv(w.raw());
    std::vector<double> exps = run_circuit(program, angles, wv);
    Tensor out({exps.size()}, exps);

    auto vjp = [program, raw = std::move(raw), angles = std::move(angles),
                wv = std::move(wv)](const Tensor& up) {
        const CircuitJacobians jac = adjoint_gradients(program, angles, wv);
        Tensor gf({raw.size()});
        Tensor gw({wv.size()});
        for (std::size_t k = 0; k < up.numel(); ++k) {
            for (std::size_t j = 0; j < raw.size(); ++j) {
                gf[j] += up[k] * jac.features[k][j] * embedding_angle_grad(raw[j]);
            }
            for (std::size_t j = 0; j < wv.size(); ++j) {
                gw[j] += up[k] * jac.weights[k][j];
            }
        }
        return std::vector<Tensor>{std::move(gf), std::move(gw)};
    };
    return tape.custom({features_id, weights_id}, std::move(out), std::move(vjp));
}

} // namespace qadv
