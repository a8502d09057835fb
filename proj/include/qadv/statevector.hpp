#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "qadv/errors.hpp"

namespace qadv {

using cplx = std::complex<double>;

// 2x2 complex matrix, row-major: [[m00, m01], [m10, m11]].
struct Mat2 {
    cplx m00, m01, m10, m11;
};

inline Mat2 dagger(const Mat2& m) {
    return {std::conj(m.m00), std::conj(m.m10), std::conj(m.m01), std::conj(m.m11)};
}

enum class Pauli { X, Y, Z };

inline char pauli_char(Pauli p) {
    switch (p) {
        case Pauli::X: return 'X';
        case Pauli::Y: return 'Y';
        default: return 'Z';
    }
}

// Dense complex amplitudes over n qubits, 1 <= n <= 8. Basis index bit
// convention: qubit 0 is the most significant bit, so for n=2 the order is
// |00>, |01>, |10>, |11> with the left bit on qubit 0.
class Statevector {
  public:
    explicit Statevector(int n_qubits) : n_(n_qubits) {
        if (n_qubits < 1 || n_qubits > 8) {
            throw ConfigError("statevector supports 1..8 qubits, got " +
                              std::to_string(n_qubits));
        }
        amps_.assign(std::size_t{1} << n_qubits, cplx(0.0, 0.0));
        amps_[0] = cplx(1.0, 0.0);
    }

    int num_qubits() const { return n_; }
    std::size_t size() const { return amps_.size(); }

    std::vector<cplx>& amps() { return amps_; }
    const std::vector<cplx>& amps() const { return amps_; }

    cplx& operator[](std::size_t i) { return amps_[i]; }
    cplx operator[](std::size_t i) const { return amps_[i]; }

    double norm_sq() const {
        double s = 0.0;
        for (const cplx& a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    std::size_t wire_mask(int wire) const {
        if (wire < 0 || wire >= n_) {
            throw ConfigError("wire " + std::to_string(wire) + " out of range for " +
                              std::to_string(n_) + " qubits");
        }
        return std::size_t{1} << (n_ - 1 - wire);
    }

  private:
    int n_;
    std::vector<cplx> amps_;
};

inline void apply_single(Statevector& st, int wire, const Mat2& u) {
    const std::size_t mask = st.wire_mask(wire);
    auto& a = st.amps();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(i & mask)) {
            const cplx lo = a[i];
            const cplx hi = a[i | mask];
            a[i] = u.m00 * lo + u.m01 * hi;
            a[i | mask] = u.m10 * lo + u.m11 * hi;
        }
    }
}

// Applies u on the target subspace where the control qubit is |1>. With
// zero_control_block set, amplitudes in the control-|0> block are zeroed
// instead of kept: that turns the unitary into |1><1| (x) u, which is what
// adjoint differentiation needs for controlled-gate parameter derivatives.
inline void apply_controlled(Statevector& st, int control, int target, const Mat2& u,
                             bool zero_control_block = false) {
    if (control == target) {
        throw ConfigError("controlled gate: control wire equals target wire (" +
                          std::to_string(control) + ")");
    }
    const std::size_t mc = st.wire_mask(control);
    const std::size_t mt = st.wire_mask(target);
    auto& a = st.amps();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((i & mc) && !(i & mt)) {
            const cplx lo = a[i];
            const cplx hi = a[i | mt];
            a[i] = u.m00 * lo + u.m01 * hi;
            a[i | mt] = u.m10 * lo + u.m11 * hi;
        }
    }
    if (zero_control_block) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!(i & mc)) {
                a[i] = cplx(0.0, 0.0);
            }
        }
    }
}

inline void apply_pauli(Statevector& st, int wire, Pauli p) {
    const std::size_t mask = st.wire_mask(wire);
    auto& a = st.amps();
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(i & mask)) {
            const cplx lo = a[i];
            const cplx hi = a[i | mask];
            switch (p) {
                case Pauli::X:
                    a[i] = hi;
                    a[i | mask] = lo;
                    break;
                case Pauli::Y:
                    a[i] = -I * hi;
                    a[i | mask] = I * lo;
                    break;
                case Pauli::Z:
                    a[i | mask] = -hi;
                    break;
            }
        }
    }
}

// <a|b>, conjugating `a`.
inline cplx inner_product(const Statevector& a, const Statevector& b) {
    if (a.size() != b.size()) {
        throw DimensionError("inner_product: dimension mismatch " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
    }
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::conj(a[i]) * b[i];
    }
    return s;
}

// <psi| P_wire |psi>. The imaginary residue is roundoff; it is discarded.
inline double expectation(const Statevector& st, int wire, Pauli p) {
    Statevector tmp = st;
    apply_pauli(tmp, wire, p);
    return inner_product(st, tmp).real();
}

} // namespace qadv
