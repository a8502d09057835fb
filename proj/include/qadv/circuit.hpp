#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qadv/errors.hpp"
#include "qadv/statevector.hpp"

namespace qadv {

enum class GateKind { H, RX, RY, RZ, U1, U2, U3, CNOT, CZ, CRX };

inline int param_count(GateKind k) {
    switch (k) {
        case GateKind::H:
        case GateKind::CNOT:
        case GateKind::CZ: return 0;
        case GateKind::RX:
        case GateKind::RY:
        case GateKind::RZ:
        case GateKind::U1:
        case GateKind::CRX: return 1;
        case GateKind::U2: return 2;
        case GateKind::U3: return 3;
    }
    return 0;
}

inline bool is_controlled(GateKind k) {
    return k == GateKind::CNOT || k == GateKind::CZ || k == GateKind::CRX;
}

inline std::string gate_name(GateKind k) {
    switch (k) {
        case GateKind::H: return "H";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::U1: return "U1";
        case GateKind::U2: return "U2";
        case GateKind::U3: return "U3";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CZ: return "CZ";
        case GateKind::CRX: return "CRX";
    }
    return "?";
}

inline GateKind gate_kind_from_name(const std::string& s) {
    if (s == "H") return GateKind::H;
    if (s == "RX") return GateKind::RX;
    if (s == "RY") return GateKind::RY;
    if (s == "RZ") return GateKind::RZ;
    if (s == "U1") return GateKind::U1;
    if (s == "U2") return GateKind::U2;
    if (s == "U3") return GateKind::U3;
    if (s == "CNOT") return GateKind::CNOT;
    if (s == "CZ") return GateKind::CZ;
    if (s == "CRX") return GateKind::CRX;
    throw FormatError("unknown gate name '" + s + "'");
}

// A gate angle slot: a literal constant, the i-th input feature, or the i-th
// trainable weight.
enum class ParamRole { Constant, Feature, Weight };

struct GateParam {
    ParamRole role = ParamRole::Constant;
    std::size_t index = 0; // Feature / Weight only
    double value = 0.0;    // Constant only

    static GateParam constant(double v) { return {ParamRole::Constant, 0, v}; }
    static GateParam feature(std::size_t i) { return {ParamRole::Feature, i, 0.0}; }
    static GateParam weight(std::size_t i) { return {ParamRole::Weight, i, 0.0}; }

    bool operator==(const GateParam& o) const {
        return role == o.role && index == o.index && value == o.value;
    }
};

struct GateOp {
    GateKind kind = GateKind::H;
    int target = 0;
    int control = -1; // -1 for single-qubit gates
    std::vector<GateParam> params;

    bool operator==(const GateOp& o) const {
        return kind == o.kind && target == o.target && control == o.control &&
               params == o.params;
    }
};

// Target-side 2x2 matrix. For controlled kinds this is the block applied when
// the control qubit is |1>.
inline Mat2 gate_matrix(GateKind k, std::span<const double> p) {
    const cplx I(0.0, 1.0);
    switch (k) {
        case GateKind::H: {
            const double r = 1.0 / std::sqrt(2.0);
            return {r, r, r, -r};
        }
        case GateKind::RX:
        case GateKind::CRX: {
            const double c = std::cos(p[0] / 2.0), s = std::sin(p[0] / 2.0);
            return {c, -I * s, -I * s, c};
        }
        case GateKind::RY: {
            const double c = std::cos(p[0] / 2.0), s = std::sin(p[0] / 2.0);
            return {c, -s, s, c};
        }
        case GateKind::RZ: {
            return {std::exp(-I * (p[0] / 2.0)), 0.0, 0.0, std::exp(I * (p[0] / 2.0))};
        }
        case GateKind::U1: {
            return {1.0, 0.0, 0.0, std::exp(I * p[0])};
        }
        case GateKind::U2: {
            const double r = 1.0 / std::sqrt(2.0);
            return {r, -r * std::exp(I * p[1]), r * std::exp(I * p[0]),
                    r * std::exp(I * (p[0] + p[1]))};
        }
        case GateKind::U3: {
            const double c = std::cos(p[0] / 2.0), s = std::sin(p[0] / 2.0);
            return {c, -std::exp(I * p[2]) * s, std::exp(I * p[1]) * s,
                    std::exp(I * (p[1] + p[2])) * c};
        }
        case GateKind::CNOT: return {0.0, 1.0, 1.0, 0.0};
        case GateKind::CZ: return {1.0, 0.0, 0.0, -1.0};
    }
    throw ConfigError("gate_matrix: unreachable");
}

// d(matrix)/d(params[slot]) at the given parameter values. Only the
// target-side block; controlled-gate derivatives also need the control-|0>
// block zeroed, which apply_controlled handles.
inline Mat2 gate_param_derivative(GateKind k, std::span<const double> p, std::size_t slot) {
    const cplx I(0.0, 1.0);
    switch (k) {
        case GateKind::RX:
        case GateKind::CRX: {
            const double c = std::cos(p[0] / 2.0), s = std::sin(p[0] / 2.0);
            return {-0.5 * s, -0.5 * I * c, -0.5 * I * c, -0.5 * s};
        }
        case GateKind::RY: {
            const double c = std::cos(p[0] / 2.0), s = std::sin(p[0] / 2.0);
            return {-0.5 * s, -0.5 * c, 0.5 * c, -0.5 * s};
        }
        case GateKind::RZ: {
            return {-0.5 * I * std::exp(-I * (p[0] / 2.0)), 0.0, 0.0,
                    0.5 * I * std::exp(I * (p[0] / 2.0))};
        }
        case GateKind::U1: {
            return {0.0, 0.0, 0.0, I * std::exp(I * p[0])};
        }
        case GateKind::U2: {
            const double r = 1.0 / std::sqrt(2.0);
            if (slot == 0) {
                return {0.0, 0.0, I * r * std::exp(I * p[0]),
                        I * r * std::exp(I * (p[0] + p[1]))};
            }
            return {0.0, -I * r * std::exp(I * p[1]), 0.0,
                    I * r * std::exp(I * (p[0] + p[1]))};
        }
        case GateKind::U3: {
            const double c = std::cos(p[0] / 2.0), s = std::sin(p[0] / 2.0);
            if (slot == 0) {
                return {-0.5 * s, -0.5 * std::exp(I * p[2]) * c, 0.5 * std::exp(I * p[1]) * c,
                        -0.5 * std::exp(I * (p[1] + p[2])) * s};
            }
            if (slot == 1) {
                return {0.0, 0.0, I * std::exp(I * p[1]) * s,
                        I * std::exp(I * (p[1] + p[2])) * c};
            }
            return {0.0, -I * std::exp(I * p[2]) * s, 0.0,
                    I * std::exp(I * (p[1] + p[2])) * c};
        }
        default: break;
    }
    throw ConfigError("gate " + gate_name(k) + " has no parameter derivative at slot " +
                      std::to_string(slot));
}

struct Measurement {
    Pauli basis = Pauli::Z;
    int wire = 0;

    bool operator==(const Measurement& o) const {
        return basis == o.basis && wire == o.wire;
    }
};

// Symbolic circuit: gates whose angle slots reference features and weights by
// index, plus a list of single-wire Pauli measurements.
struct CircuitProgram {
    int n_qubits = 1;
    std::vector<GateOp> gates;
    std::vector<Measurement> measurements;

    bool operator==(const CircuitProgram& o) const {
        return n_qubits == o.n_qubits && gates == o.gates && measurements == o.measurements;
    }

    std::size_t feature_count() const { return role_count(ParamRole::Feature); }
    std::size_t weight_count() const { return role_count(ParamRole::Weight); }

    // Structural checks: wire ranges, slot counts, dense feature/weight
    // indices, distinct measured wires.
    void validate() const {
        if (n_qubits < 1 || n_qubits > 8) {
            throw ConfigError("program needs 1..8 qubits, got " + std::to_string(n_qubits));
        }
        for (std::size_t gi = 0; gi < gates.size(); ++gi) {
            const GateOp& g = gates[gi];
            const std::string where = "gate " + std::to_string(gi) + " (" + gate_name(g.kind) + ")";
            if (g.target < 0 || g.target >= n_qubits) {
                throw ConfigError(where + ": target wire " + std::to_string(g.target) +
                                  " out of range");
            }
            if (is_controlled(g.kind)) {
                if (g.control < 0 || g.control >= n_qubits) {
                    throw ConfigError(where + ": control wire " + std::to_string(g.control) +
                                      " out of range");
                }
                if (g.control == g.target) {
                    throw ConfigError(where + ": control equals target");
                }
            } else if (g.control != -1) {
                throw ConfigError(where + ": single-qubit gate carries a control wire");
            }
            if (g.params.size() != static_cast<std::size_t>(param_count(g.kind))) {
                throw ConfigError(where + ": expected " + std::to_string(param_count(g.kind)) +
                                  " params, got " + std::to_string(g.params.size()));
            }
        }
        check_dense(ParamRole::Feature, "feature");
        check_dense(ParamRole::Weight, "weight");
        std::set<int> seen;
        for (const Measurement& m : measurements) {
            if (m.wire < 0 || m.wire >= n_qubits) {
                throw ConfigError("measurement wire " + std::to_string(m.wire) + " out of range");
            }
            if (!seen.insert(m.wire).second) {
                throw ConfigError("wire " + std::to_string(m.wire) + " measured twice");
            }
        }
    }

  private:
    std::size_t role_count(ParamRole role) const {
        std::size_t n = 0;
        for (const GateOp& g : gates) {
            for (const GateParam& p : g.params) {
                if (p.role == role) {
                    n = std::max(n, p.index + 1);
                }
            }
        }
        return n;
    }

    void check_dense(ParamRole role, const char* label) const {
        std::set<std::size_t> used;
        for (const GateOp& g : gates) {
            for (const GateParam& p : g.params) {
                if (p.role == role) {
                    used.insert(p.index);
                }
            }
        }
        if (used.empty()) {
            return;
        }
        const std::size_t top = *used.rbegin();
        for (std::size_t i = 0; i <= top; ++i) {
            if (!used.count(i)) {
                throw ConfigError(std::string(label) + " indices are not dense: index " +
                                  std::to_string(i) + " unused but " + std::to_string(top) +
                                  " is used");
            }
        }
    }
};

inline double resolve_param(const GateParam& p, std::span<const double> features,
                            std::span<const double> weights) {
    switch (p.role) {
        case ParamRole::Constant: return p.value;
        case ParamRole::Feature: return features[p.index];
        case ParamRole::Weight: return weights[p.index];
    }
    return 0.0;
}

inline std::vector<double> resolve_gate_params(const GateOp& g, std::span<const double> features,
                                               std::span<const double> weights) {
    std::vector<double> out;
    out.reserve(g.params.size());
    for (const GateParam& p : g.params) {
        out.push_back(resolve_param(p, features, weights));
    }
    return out;
}

inline void apply_gate(Statevector& st, const GateOp& g, std::span<const double> resolved) {
    const Mat2 u = gate_matrix(g.kind, resolved);
    if (is_controlled(g.kind)) {
        apply_controlled(st, g.control, g.target, u);
    } else {
        apply_single(st, g.target, u);
    }
}

inline void apply_gate_dagger(Statevector& st, const GateOp& g, std::span<const double> resolved) {
    const Mat2 u = dagger(gate_matrix(g.kind, resolved));
    if (is_controlled(g.kind)) {
        apply_controlled(st, g.control, g.target, u);
    } else {
        apply_single(st, g.target, u);
    }
}

inline void check_bindings(const CircuitProgram& prog, std::span<const double> features,
                           std::span<const double> weights) {
    if (features.size() != prog.feature_count()) {
        throw DimensionError("program expects " + std::to_string(prog.feature_count()) +
                             " features, got " + std::to_string(features.size()));
    }
    if (weights.size() != prog.weight_count()) {
        throw DimensionError("program expects " + std::to_string(prog.weight_count()) +
                             " weights, got " + std::to_string(weights.size()));
    }
}

inline Statevector run_statevector(const CircuitProgram& prog, std::span<const double> features,
                                   std::span<const double> weights) {
    prog.validate();
    check_bindings(prog, features, weights);
    Statevector st(prog.n_qubits);
    for (const GateOp& g : prog.gates) {
        const std::vector<double> p = resolve_gate_params(g, features, weights);
        apply_gate(st, g, p);
    }
    return st;
}

// Expectation value of each measurement, in program order.
inline std::vector<double> run_circuit(const CircuitProgram& prog,
                                       std::span<const double> features,
                                       std::span<const double> weights) {
    const Statevector st = run_statevector(prog, features, weights);
    std::vector<double> out;
    out.reserve(prog.measurements.size());
    for (const Measurement& m : prog.measurements) {
        out.push_back(expectation(st, m.wire, m.basis));
    }
    return out;
}

// ---- text form ----
//
//   # circuit text v1
//   qubits 4
//   gate H 0
//   gate RY 1 feature:0
//   gate CRX 0 1 const:1.5707963267948966
//   measure Z 0
//
// Controlled gates list control then target. Angle slots are const:<value>,
// feature:<index> or weight:<index>.

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string param_to_text(const GateParam& p) {
    switch (p.role) {
        case ParamRole::Constant: return "const:" + format_double(p.value);
        case ParamRole::Feature: return "feature:" + std::to_string(p.index);
        case ParamRole::Weight: return "weight:" + std::to_string(p.index);
    }
    return "";
}

inline GateParam param_from_text(const std::string& s) {
    const std::size_t colon = s.find(':');
    if (colon == std::string::npos) {
        throw FormatError("bad angle slot '" + s + "': expected role:value");
    }
    const std::string role = s.substr(0, colon);
    const std::string rest = s.substr(colon + 1);
    try {
        if (role == "const") {
            std::size_t used = 0;
            const double v = std::stod(rest, &used);
            if (used != rest.size()) {
                throw FormatError("");
            }
            return GateParam::constant(v);
        }
        if (role == "feature" || role == "weight") {
            std::size_t used = 0;
            const unsigned long idx = std::stoul(rest, &used);
            if (used != rest.size()) {
                throw FormatError("");
            }
            return role == "feature" ? GateParam::feature(idx) : GateParam::weight(idx);
        }
    } catch (const FormatError&) {
        throw FormatError("bad angle slot '" + s + "': unparsable value");
    } catch (const std::exception&) {
        throw FormatError("bad angle slot '" + s + "': unparsable value");
    }
    throw FormatError("bad angle slot '" + s + "': unknown role '" + role + "'");
}

inline std::string program_to_text(const CircuitProgram& prog) {
    std::ostringstream os;
    os << "# circuit text v1\n";
    os << "qubits " << prog.n_qubits << "\n";
    for (const GateOp& g : prog.gates) {
        os << "gate " << gate_name(g.kind);
        if (is_controlled(g.kind)) {
            os << " " << g.control;
        }
        os << " " << g.target;
        for (const GateParam& p : g.params) {
            os << " " << param_to_text(p);
        }
        os << "\n";
    }
    for (const Measurement& m : prog.measurements) {
        os << "measure " << pauli_char(m.basis) << " " << m.wire << "\n";
    }
    return os.str();
}

inline CircuitProgram program_from_text(const std::string& text) {
    CircuitProgram prog;
    bool saw_qubits = false;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream ls(line);
        std::vector<std::string> tok;
        std::string t;
        while (ls >> t) {
            tok.push_back(t);
        }
        if (tok.empty() || tok[0][0] == '#') {
            continue;
        }
        const std::string where = "line " + std::to_string(lineno);
        auto parse_int = [&](const std::string& s) {
            try {
                std::size_t used = 0;
                const int v = std::stoi(s, &used);
                if (used != s.size()) {
                    throw std::invalid_argument("");
                }
                return v;
            } catch (const std::exception&) {
                throw FormatError(where + ": expected integer, got '" + s + "'");
            }
        };
        if (tok[0] == "qubits") {
            if (saw_qubits) {
                throw FormatError(where + ": duplicate qubits line");
            }
            if (tok.size() != 2) {
                throw FormatError(where + ": qubits line needs one count");
            }
            prog.n_qubits = parse_int(tok[1]);
            saw_qubits = true;
        } else if (tok[0] == "gate") {
            if (!saw_qubits) {
                throw FormatError(where + ": gate before qubits line");
            }
            if (tok.size() < 2) {
                throw FormatError(where + ": gate line needs a name");
            }
            GateOp g;
            g.kind = gate_kind_from_name(tok[1]);
            const std::size_t wires = is_controlled(g.kind) ? 2 : 1;
            const std::size_t want = 2 + wires + static_cast<std::size_t>(param_count(g.kind));
            if (tok.size() != want) {
                throw FormatError(where + ": " + gate_name(g.kind) + " needs " +
                                  std::to_string(wires) + " wire(s) and " +
                                  std::to_string(param_count(g.kind)) + " angle slot(s)");
            }
            if (wires == 2) {
                g.control = parse_int(tok[2]);
                g.target = parse_int(tok[3]);
            } else {
                g.target = parse_int(tok[2]);
            }
            for (std::size_t i = 2 + wires; i < tok.size(); ++i) {
                g.params.push_back(param_from_text(tok[i]));
            }
            prog.gates.push_back(std::move(g));
        } else if (tok[0] == "measure") {
            if (!saw_qubits) {
                throw FormatError(where + ": measure before qubits line");
            }
            if (tok.size() != 3 || tok[1].size() != 1) {
                throw FormatError(where + ": measure line is 'measure <X|Y|Z> <wire>'");
            }
            Measurement m;
            switch (tok[1][0]) {
                case 'X': m.basis = Pauli::X; break;
                case 'Y': m.basis = Pauli::Y; break;
                case 'Z': m.basis = Pauli::Z; break;
                default: throw FormatError(where + ": unknown basis '" + tok[1] + "'");
            }
            m.wire = parse_int(tok[2]);
            prog.measurements.push_back(m);
        } else {
            throw FormatError(where + ": unknown directive '" + tok[0] + "'");
        }
    }
    if (!saw_qubits) {
        throw FormatError("missing qubits line");
    }
    prog.validate();
    return prog;
}

} // namespace qadv
