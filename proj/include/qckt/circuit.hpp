#pragma once

#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qckt/cmat.hpp"
#include "qckt/su2.hpp"
#include "qckt/vec3.hpp"

namespace qckt {

/// Dressed CNOT on two wires, fully specified by one unit vector per wire.
/// Equals sigma_{v_i}(wire_i) raised to n_{v_j}(wire_j); symmetric under
/// swapping the (wire, vector) slots.
struct DcNot {
    int wire_i = 0;
    UnitVec3 v_i;
    int wire_j = 1;
    UnitVec3 v_j;

    DcNot() = default;
    DcNot(int wi, UnitVec3 vi, int wj, UnitVec3 vj) : wire_i(wi), v_i(vi), wire_j(wj), v_j(vj) {
        if (wire_i == wire_j) throw std::invalid_argument("DcNot: wires must differ");
    }

    /// Vector on a given wire.
    const UnitVec3& vec_on(int wire) const {
        if (wire == wire_i) return v_i;
        if (wire == wire_j) return v_j;
        throw std::invalid_argument("DcNot::vec_on: gate does not touch this wire");
    }
    bool touches(int wire) const { return wire == wire_i || wire == wire_j; }
    int other_wire(int wire) const { return wire == wire_i ? wire_j : wire_i; }
};

/// e^{i theta sigma_axis} on one wire.
struct LocalRot {
    int wire = 0;
    UnitVec3 axis;
    double theta = 0.0;
};

/// Global phase e^{i theta}.
struct GlobalPhase {
    double theta = 0.0;
};

using Gate = std::variant<DcNot, LocalRot, GlobalPhase>;

/// Ordered gate list; the first element acts first.
struct Circuit {
    int nbits = 1;
    std::vector<Gate> gates;
};

inline int gate_max_wire(const Gate& g) {
    if (const auto* d = std::get_if<DcNot>(&g)) return std::max(d->wire_i, d->wire_j);
    if (const auto* r = std::get_if<LocalRot>(&g)) return r->wire;
    return -1;
}

inline void validate(const Circuit& c) {
    if (c.nbits < 1 || c.nbits > 3)
        throw std::invalid_argument("Circuit: nbits must be 1, 2 or 3");
    for (const Gate& g : c.gates)
        if (gate_max_wire(g) >= c.nbits)
            throw std::invalid_argument("Circuit: gate wire index out of range");
}

/// Embed a single-qubit operator on one wire; wire 0 is the least-significant
/// qubit in state indexing (rightmost tensor factor).
inline CMat embed1(const CMat& op, int wire, int nbits) {
    if (wire < 0 || wire >= nbits) throw std::invalid_argument("embed1: wire out of range");
    CMat full = CMat::identity(1);
    for (int k = nbits - 1; k >= 0; --k) full = kron(full, k == wire ? op : CMat::identity(2));
    return full;
}

/// Projector form (1/2)(1 + sigma_{v_i} + sigma_{v_j} - sigma_{v_i} sigma_{v_j})
/// embedded on the named wires. Hermitian involution.
inline CMat dcnot_unitary(const DcNot& d, int nbits) {
    if (d.wire_i >= nbits || d.wire_j >= nbits)
        throw std::invalid_argument("dcnot_unitary: wire out of range");
    CMat pi = embed1(paulion(d.v_i.vec()), d.wire_i, nbits);
    CMat pj = embed1(paulion(d.v_j.vec()), d.wire_j, nbits);
    CMat id = CMat::identity(1 << nbits);
    return 0.5 * (id + pi + pj - pi * pj);
}

inline CMat gate_unitary(const Gate& g, int nbits) {
    if (const auto* d = std::get_if<DcNot>(&g)) return dcnot_unitary(*d, nbits);
    if (const auto* r = std::get_if<LocalRot>(&g)) return embed1(rot2(r->axis, r->theta), r->wire, nbits);
    const auto& p = std::get<GlobalPhase>(g);
    return std::polar(1.0, p.theta) * CMat::identity(1 << nbits);
}

/// Operator product of the gate list; later gates compose on the left.
inline CMat gates_unitary(std::span<const Gate> gates, int nbits) {
    CMat u = CMat::identity(1 << nbits);
    for (const Gate& g : gates) u = gate_unitary(g, nbits) * u;
    return u;
}

inline CMat circuit_unitary(const Circuit& c) {
    validate(c);
    return gates_unitary(c.gates, c.nbits);
}

enum class DcSide { i, j };

/// Sign-flipped DC-NOT plus the Paulion gate on the opposite wire whose
/// product reproduces the original gate:
///   U(gate) = U(flipped) * U(phase) * U(rot)   (the three factors commute).
struct NegatedDcNot {
    DcNot flipped;
    LocalRot rot;      // e^{i(pi/2) sigma_v} on the opposite wire
    GlobalPhase phase; // e^{-i pi/2}; together they form the Paulion sigma_v
};

inline NegatedDcNot negate_vector(const DcNot& d, DcSide side) {
    NegatedDcNot out;
    out.flipped = d;
    if (side == DcSide::i) {
        out.flipped.v_i = -d.v_i;
        out.rot = LocalRot{d.wire_j, d.v_j, M_PI_2};
    } else {
        out.flipped.v_j = -d.v_j;
        out.rot = LocalRot{d.wire_i, d.v_i, M_PI_2};
    }
    out.phase = GlobalPhase{-M_PI_2};
    return out;
}

/// Gate pair realizing the Paulion sigma_v on a wire: e^{-i pi/2} e^{i(pi/2) sigma_v}.
inline std::vector<Gate> paulion_gates(int wire, const UnitVec3& v) {
    return {GlobalPhase{-M_PI_2}, LocalRot{wire, v, M_PI_2}};
}

/// Gate list for an arbitrary U(2) factor on a wire (global phase + one rotation).
/// Factors within 1e-13 of the identity produce no gates.
inline std::vector<Gate> u2_gates(int wire, const CMat& u) {
    if (u.dim() != 2) throw std::invalid_argument("u2_gates: need a 2x2 matrix");
    std::vector<Gate> out;
    cplx d = det(u);
    double delta = 0.5 * std::arg(d);
    CMat s = std::polar(1.0, -delta) * u;
    AxisAngle aa = su2_log(s);
    if (frob_dist(u, CMat::identity(2)) < 1e-13) return out;
    if (std::abs(delta) > 1e-15) out.push_back(GlobalPhase{delta});
    if (std::abs(aa.theta) > 1e-15) out.push_back(LocalRot{wire, aa.axis, aa.theta});
    return out;
}

}  // namespace qckt
