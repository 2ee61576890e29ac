#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <vector>

#include "qckt/circuit.hpp"
#include "qckt/invariants.hpp"

namespace qckt {

enum class RewriteStatus { applied, not_applicable, no_solution_found, numeric_failure };

/// Replacement run plus the external local operations that certify it.
/// The certified identity is
///   U(run) = U(post_locals) * U(replacement) * U(pre_locals)
/// with each list composed chronologically; residual is the Frobenius defect.
struct RewriteOutcome {
    std::vector<DcNot> replacement;
    std::vector<Gate> pre_locals, post_locals;
    double residual = 0.0;
};

struct RewriteResult {
    RewriteStatus status = RewriteStatus::not_applicable;
    RewriteOutcome outcome;
    bool ok() const { return status == RewriteStatus::applied; }
};

enum class TClass { t1a, t1b, t2a, t2b, t3a, t3b, t4, none };

/// p/q vector pair on a basis plane: p = cos(xi) w1 + sin(xi) w2, q with -sin.
struct PQVectors {
    double xi;
    UnitVec3 p, q;
    PQVectors(const UnitVec3& w1, const UnitVec3& w2, double xi_)
        : xi(xi_),
          p(UnitVec3::normalized(std::cos(xi_) * w1.vec() + std::sin(xi_) * w2.vec())),
          q(UnitVec3::normalized(std::cos(xi_) * w1.vec() - std::sin(xi_) * w2.vec())) {}
};

namespace detail {

/// A same-pair DC-NOT run normalized to an embedded 2-qubit space:
/// bit 0 = the lower wire index, bit 1 = the higher.
struct PairRun {
    int wlo = 0, whi = 1;
    std::vector<VecPair> pairs;  // chronological (bit0 vector, bit1 vector)
};

inline PairRun pair_run(std::span<const DcNot> run) {
    if (run.empty()) throw std::invalid_argument("pair_run: empty run");
    PairRun pr;
    pr.wlo = std::min(run[0].wire_i, run[0].wire_j);
    pr.whi = std::max(run[0].wire_i, run[0].wire_j);
    for (const DcNot& d : run) {
        if (std::min(d.wire_i, d.wire_j) != pr.wlo || std::max(d.wire_i, d.wire_j) != pr.whi)
            throw std::invalid_argument("pair_run: gates act on different wire pairs");
        pr.pairs.emplace_back(d.vec_on(pr.wlo), d.vec_on(pr.whi));
    }
    return pr;
}

inline CMat pair_unitary(const VecPair& p) {
    return dcnot_unitary(DcNot{0, p.first, 1, p.second}, 2);
}

inline CMat pairs_unitary(std::span<const VecPair> ps) {
    CMat u = CMat::identity(4);
    for (const VecPair& p : ps) u = pair_unitary(p) * u;
    return u;
}

inline CMat replacement_unitary(std::span<const DcNot> repl, int nbits) {
    CMat u = CMat::identity(1 << nbits);
    for (const DcNot& d : repl) u = dcnot_unitary(d, nbits) * u;
    return u;
}

/// Swap the bit-0 and bit-1 roles of every pair (used for mirror-case proofs).
inline std::vector<VecPair> flip_pairs(std::span<const VecPair> ps) {
    std::vector<VecPair> out;
    for (const VecPair& p : ps) out.emplace_back(p.second, p.first);
    return out;
}

inline void swap_gate_wires01(Gate& g) {
    if (auto* d = std::get_if<DcNot>(&g)) {
        d->wire_i = 1 - d->wire_i;
        d->wire_j = 1 - d->wire_j;
    } else if (auto* r = std::get_if<LocalRot>(&g)) {
        r->wire = 1 - r->wire;
    }
}

inline void flip_outcome_wires(RewriteOutcome& o) {
    for (DcNot& d : o.replacement) {
        d.wire_i = 1 - d.wire_i;
        d.wire_j = 1 - d.wire_j;
    }
    for (Gate& g : o.pre_locals) swap_gate_wires01(g);
    for (Gate& g : o.post_locals) swap_gate_wires01(g);
}

inline void remap_outcome_impl(RewriteOutcome& o, int from_lo, int from_hi, int wlo, int whi) {
    auto m = [&](int w) { return w == from_lo ? wlo : (w == from_hi ? whi : w); };
    for (DcNot& d : o.replacement) {
        d.wire_i = m(d.wire_i);
        d.wire_j = m(d.wire_j);
    }
    auto fix = [&](Gate& g) {
        if (auto* d = std::get_if<DcNot>(&g)) {
            d->wire_i = m(d->wire_i);
            d->wire_j = m(d->wire_j);
        } else if (auto* r = std::get_if<LocalRot>(&g)) {
            r->wire = m(r->wire);
        }
    };
    for (Gate& g : o.pre_locals) fix(g);
    for (Gate& g : o.post_locals) fix(g);
}

/// Embedded (0, 1) -> actual wires.
inline void remap_outcome(RewriteOutcome& o, int wlo, int whi) {
    remap_outcome_impl(o, 0, 1, wlo, whi);
}

/// Actual wires -> embedded (0, 1).
inline void unmap_outcome(RewriteOutcome& o, int wlo, int whi) {
    remap_outcome_impl(o, wlo, whi, 0, 1);
}

inline std::vector<Gate> adjoint_gates(std::span<const Gate> gs) {
    std::vector<Gate> out(gs.rbegin(), gs.rend());
    for (Gate& g : out) {
        if (auto* r = std::get_if<LocalRot>(&g))
            r->theta = -r->theta;
        else if (auto* p = std::get_if<GlobalPhase>(&g))
            p->theta = -p->theta;
        // DC-NOTs are involutions
    }
    return out;
}

inline RewriteOutcome reverse_outcome(const RewriteOutcome& o) {
    RewriteOutcome r;
    r.replacement.assign(o.replacement.rbegin(), o.replacement.rend());
    r.pre_locals = adjoint_gates(o.post_locals);
    r.post_locals = adjoint_gates(o.pre_locals);
    r.residual = o.residual;
    return r;
}

/// Factor the remaining right-hand local slack of the identity
/// U(l) = U(post) U(repl) U(pre_old) U(new), prepend the factored gates to
/// pre_locals, and set the final residual. Everything in the embedded 2-qubit
/// space (wires 0/1).
inline RewriteStatus certify2(const CMat& l, RewriteOutcome& out, double tol) {
    CMat upre = gates_unitary(out.pre_locals, 2);
    CMat upost = gates_unitary(out.post_locals, 2);
    CMat urepl = replacement_unitary(out.replacement, 2);
    CMat known = upost * urepl * upre;
    CMat slack = known.adjoint() * l;
    if (frob_dist(slack, CMat::identity(4)) > 1e-13) {
        FactorResult f = factor_tensor_product(slack, 2);
        if (!f.ok) {
            out.residual = f.residual;
            return RewriteStatus::numeric_failure;
        }
        std::vector<Gate> fresh;
        if (std::abs(f.phase.theta) > 1e-15) fresh.push_back(GlobalPhase{f.phase.theta});
        for (int w = 0; w < 2; ++w)
            for (Gate& g : u2_gates(w, f.factors[w])) fresh.push_back(g);
        out.pre_locals.insert(out.pre_locals.begin(), fresh.begin(), fresh.end());
        upre = gates_unitary(out.pre_locals, 2);
    }
    out.residual = frob_dist(l, upost * urepl * upre);
    return out.residual <= tol ? RewriteStatus::applied : RewriteStatus::numeric_failure;
}

inline RewriteResult finish(const CMat& l, RewriteOutcome out, const PairRun& pr, double tol) {
    RewriteResult res;
    res.status = certify2(l, out, tol);
    remap_outcome(out, pr.wlo, pr.whi);
    res.outcome = std::move(out);
    return res;
}

/// h-frame of the proofs: (k1, k2, k3) = (b', [a'b'b']/s, [a'b']/s) with the
/// degenerate substitutes when s = |a' x b'| vanishes. `other` is the third
/// vector (c') the frame must accommodate when the pair is parallel.
struct KFrame {
    UnitVec3 k1, k2, k3;
    double s_lam = 0.0, c_lam = 0.0;
};

inline KFrame k_frame(const UnitVec3& a, const UnitVec3& b, const UnitVec3& other) {
    KFrame f;
    f.c_lam = dot(a.vec(), b.vec());
    Vec3 ab = cross(a.vec(), b.vec());
    f.s_lam = norm(ab);
    f.k1 = b;
    if (f.s_lam > kGeomTol) {
        f.k2 = UnitVec3::normalized(cross(ab, b.vec()) / f.s_lam);
        f.k3 = UnitVec3::normalized(ab / f.s_lam);
    } else {
        Vec3 bx = cross(b.vec(), other.vec());
        f.k2 = norm(bx) > kGeomTol ? UnitVec3::normalized(bx) : complete_rhon(b).f2;
        f.k3 = UnitVec3::normalized(cross(f.k1.vec(), f.k2.vec()));
    }
    return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Angle swapping (2 -> 2)

inline RewriteResult swap_angles(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 2) throw std::invalid_argument("swap_angles: need exactly 2 DC-NOTs");
    const auto& [a, ap] = pr.pairs[0];
    const auto& [b, bp] = pr.pairs[1];

    auto fbasis = [](const UnitVec3& av, const UnitVec3& bv) {
        Vec3 x = cross(av.vec(), bv.vec());
        double s = norm(x);
        if (s > kGeomTol)
            return RhonBasis(bv, UnitVec3::normalized(cross(x, bv.vec()) / s),
                             UnitVec3::normalized(x / s));
        return complete_rhon(bv);
    };
    RhonBasis f = fbasis(a, b);
    RhonBasis fp = fbasis(ap, bp);
    double alpha = std::atan2(norm(cross(a.vec(), b.vec())), dot(a.vec(), b.vec()));
    double alpha_p = std::atan2(norm(cross(ap.vec(), bp.vec())), dot(ap.vec(), bp.vec()));

    RewriteOutcome out;
    UnitVec3 bf = f.f3, af = UnitVec3::normalized(std::cos(alpha_p) * f.f3.vec() +
                                                  std::sin(alpha_p) * f.f2.vec());
    UnitVec3 bpf = fp.f3, apf = UnitVec3::normalized(std::cos(alpha) * fp.f3.vec() +
                                                     std::sin(alpha) * fp.f2.vec());
    out.replacement = {DcNot{0, af, 1, apf}, DcNot{0, bf, 1, bpf}};
    // L = R (U'^ (x) U^): pre-local U^ on bit 0, U'^ on bit 1 with
    // U = e^{i a/2 s_f3} e^{-i a'/2 s_f1}.
    out.pre_locals = {LocalRot{0, f.f3, -alpha / 2}, LocalRot{0, f.f1, alpha_p / 2},
                      LocalRot{1, fp.f3, -alpha_p / 2}, LocalRot{1, fp.f1, alpha / 2}};
    return detail::finish(detail::pairs_unitary(pr.pairs), std::move(out), pr, 1e-8);
}

// ---------------------------------------------------------------------------
// 2 -> 1 and 2 -> 0

inline RewriteResult reduce_2to1(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 2) throw std::invalid_argument("reduce_2to1: need exactly 2 DC-NOTs");
    bool flipped = false;
    auto pairs = pr.pairs;
    {
        const auto& [a, ap] = pairs[0];
        const auto& [b, bp] = pairs[1];
        bool foil0 = perpendicular(a.vec(), b.vec());
        bool breach1 = parallel(ap.vec(), bp.vec());
        bool breach0 = parallel(a.vec(), b.vec());
        bool foil1 = perpendicular(ap.vec(), bp.vec());
        if (foil0 && breach1) {
            // canonical orientation below
        } else if (breach0 && foil1) {
            pairs = detail::flip_pairs(pairs);
            flipped = true;
        } else {
            return {};
        }
    }
    const auto& [a, ap] = pairs[0];
    const auto& [b, bp] = pairs[1];
    RewriteOutcome out;
    if (dot(ap.vec(), bp.vec()) < 0) {
        // a' = -b': flip it, compensating Paulion sigma_a on bit 0
        for (Gate& g : paulion_gates(0, a)) out.pre_locals.push_back(g);
    }
    // [sigma_b sigma_a]^{n} = [i sigma_{b x a}]^{n} = DCNOT(b x a, b') i^{n_{b'}}
    UnitVec3 bxa = UnitVec3::normalized(cross(b.vec(), a.vec()));
    out.replacement = {DcNot{0, bxa, 1, bp}};
    out.pre_locals.push_back(GlobalPhase{M_PI_4});
    out.pre_locals.push_back(LocalRot{1, bp, -M_PI_4});
    if (flipped) detail::flip_outcome_wires(out);
    return detail::finish(detail::pairs_unitary(pr.pairs), std::move(out), pr, 1e-8);
}

inline RewriteResult reduce_2to0(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 2) throw std::invalid_argument("reduce_2to0: need exactly 2 DC-NOTs");
    const auto& [a, ap] = pr.pairs[0];
    const auto& [b, bp] = pr.pairs[1];
    if (!parallel(a.vec(), b.vec()) || !parallel(ap.vec(), bp.vec())) return {};
    RewriteOutcome out;
    if (dot(a.vec(), b.vec()) < 0)
        for (Gate& g : paulion_gates(1, bp)) out.pre_locals.push_back(g);
    if (dot(ap.vec(), bp.vec()) < 0)
        for (Gate& g : paulion_gates(0, b)) out.pre_locals.push_back(g);
    return detail::finish(detail::pairs_unitary(pr.pairs), std::move(out), pr, 1e-8);
}

// ---------------------------------------------------------------------------
// 3 -> 2 and its persistent variant

namespace detail {

/// Shared construction data for the primed branch of the 3->2 family.
struct ThreeToTwoCore {
    KFrame kp;                      // frame of (a', b') accommodating c'
    double s_phi_p = 0, c_phi_p = 0;
    double lam2r = 0;               // required c_a' c_a
    double ssaa = 0;                // required s_a' s_a
    UnitVec3 f2, f2p;
    RMat3 l2i_req;                  // required Gamma(Lam_2i)
};

inline ThreeToTwoCore three_to_two_core(const std::vector<VecPair>& pairs) {
    const auto& [a, ap] = pairs[0];
    const auto& [b, bp] = pairs[1];
    const auto& [c, cp] = pairs[2];
    ThreeToTwoCore core;
    core.kp = k_frame(ap, bp, cp);
    core.s_phi_p = dot(cp.vec(), core.kp.k1.vec());
    core.c_phi_p = dot(cp.vec(), core.kp.k3.vec());

    G3Parts g3 = g3_closed_parts(pairs[0], pairs[1], pairs[2]);
    core.lam2r = -g3.lam_i;
    core.l2i_req = g3.Lr;  // Lam_2i = Lam_3r

    double slp = core.kp.s_lam, clp = core.kp.c_lam;
    double ab = dot(a.vec(), b.vec());
    Vec3 h = slp * core.s_phi_p * ab * cross_fold({b.vec(), c.vec(), c.vec()}) -
             clp * core.c_phi_p * cross_fold({a.vec(), b.vec(), c.vec(), c.vec()}) +
             slp * dot(cross_fold({a.vec(), b.vec(), b.vec()}), c.vec()) * c.vec();
    double hn = norm(h);
    if (hn > kGeomTol) {
        core.ssaa = hn;
        core.f2 = UnitVec3::normalized(h);
        core.f2p = slp > kGeomTol
                       ? UnitVec3::normalized(
                             cross_fold({ap.vec(), bp.vec(), bp.vec(), cp.vec()}) / slp)
                       : UnitVec3::normalized(cross(core.kp.k2.vec(), cp.vec()));
    } else {
        core.ssaa = 0.0;
        core.f2 = null_direction(core.l2i_req, false);
        core.f2p = null_direction(core.l2i_req, true);
    }
    return core;
}

inline void vectors_from_params2(const PrincipalParams2& p, RewriteOutcome& out) {
    UnitVec3 af = principal_a(p.alpha, p.F);
    UnitVec3 apf = principal_a(p.alpha_prime, p.F_prime);
    out.replacement = {DcNot{0, af, 1, apf}, DcNot{0, p.F.f1, 1, p.F_prime.f1}};
}

}  // namespace detail

inline RewriteResult reduce_3to2(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 3) throw std::invalid_argument("reduce_3to2: need exactly 3 DC-NOTs");
    auto pairs = pr.pairs;
    auto right_angle = [](const std::vector<VecPair>& ps, bool primed) {
        auto v = [&](int k) { return primed ? ps[k].second.vec() : ps[k].first.vec(); };
        return std::abs(dot(cross_fold({v(0), v(1), v(1)}), v(2)));
    };
    bool primed_ok = right_angle(pairs, true) <= kGeomTol;
    bool unprimed_ok = right_angle(pairs, false) <= kGeomTol;
    if (!primed_ok && !unprimed_ok) return {};
    bool flipped = false;
    if (!primed_ok) {
        pairs = detail::flip_pairs(pairs);
        flipped = true;
    }
    detail::ThreeToTwoCore core = detail::three_to_two_core(pairs);
    PrincipalParams2 p =
        detail::g2_tail(core.lam2r, core.ssaa, core.f2, core.f2p, core.l2i_req);
    RewriteOutcome out;
    detail::vectors_from_params2(p, out);
    if (flipped) detail::flip_outcome_wires(out);
    return detail::finish(detail::pairs_unitary(pr.pairs), std::move(out), pr, 1e-7);
}

inline RewriteResult reduce_3to2_persistent(std::span<const DcNot> run, const UnitVec3& keep) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 3)
        throw std::invalid_argument("reduce_3to2_persistent: need exactly 3 DC-NOTs");
    const auto& pairs = pr.pairs;
    const auto& [a, ap] = pairs[0];
    const auto& [b, bp] = pairs[1];
    const auto& [c, cp] = pairs[2];
    if (norm(keep.vec() - cp.vec()) > 1e-9) return {};  // keep must be the persisting c'
    // constraint 1: [a'b'b'].c' = 0
    if (std::abs(dot(cross_fold({ap.vec(), bp.vec(), bp.vec()}), cp.vec())) > 1e-8) return {};
    detail::ThreeToTwoCore core = detail::three_to_two_core(pairs);
    double slp = core.kp.s_lam, clp = core.kp.c_lam;
    double sphp = core.s_phi_p, cphp = core.c_phi_p;
    double ab = dot(a.vec(), b.vec());
    // constraint 2: [c_phi' (a.b) [a b] - s_lam' c_lam' s_phi' b] . c = 0
    Vec3 con = cphp * ab * cross(a.vec(), b.vec()) - slp * clp * sphp * b.vec();
    if (std::abs(dot(con, c.vec())) > 1e-8) return {};

    double vol = triple(a.vec(), b.vec(), c.vec());
    Vec3 v1 = -clp * ab * c.vec() + clp * sphp * cross_fold({a.vec(), b.vec(), c.vec()}) +
              slp * cphp * ab * cross(b.vec(), c.vec());
    Vec3 v2 = slp * sphp * ab * dot(b.vec(), c.vec()) * c.vec() - clp * cphp * vol * c.vec() +
              slp * cross_fold({a.vec(), b.vec(), b.vec(), c.vec(), c.vec()});

    // The primed frame is pinned: f1' = c' (the persisting vector), f3' = k2'.
    // The orthogonal v1/v2 pair pins the unprimed f3/f1 slots; missing slots
    // are completed to right-handed frames. The four sin/cos products are
    // then read off as projections of the required invariant parts, which
    // handles every sign and degeneracy at once.
    detail::G3Parts g3 = detail::g3_closed_parts(pairs[0], pairs[1], pairs[2]);
    RMat3 l2i_req = g3.Lr;             // Lam_2i = Lam_3r
    RMat3 l2r_req = -1.0 * g3.Li;      // Lam_2r = -Lam_3i
    UnitVec3 f1p = cp, f3p = core.kp.k2;
    UnitVec3 f2p = UnitVec3::normalized(cross(f3p.vec(), f1p.vec()));

    UnitVec3 f1, f2, f3;
    Vec3 q = matvec(l2r_req.transposed(), f2p.vec());  // -ssaa * f2
    double n1 = norm(v1), n2 = norm(v2), nq = norm(q);
    if (n2 > kGeomTol && n1 > kGeomTol) {
        f1 = UnitVec3::normalized(v2);
        f3 = UnitVec3::normalized(v1);
        f2 = UnitVec3::normalized(cross(f3.vec(), f1.vec()));
    } else if (n2 > kGeomTol) {
        f1 = UnitVec3::normalized(v2);
        f2 = nq > kGeomTol ? UnitVec3::normalized(across(q, f1.vec()))
                           : complete_rhon(f1).f2;
        f3 = UnitVec3::normalized(cross(f1.vec(), f2.vec()));
    } else if (n1 > kGeomTol) {
        f3 = UnitVec3::normalized(v1);
        f2 = nq > kGeomTol ? UnitVec3::normalized(across(q, f3.vec()))
                           : complete_rhon(f3).f2;
        f1 = UnitVec3::normalized(cross(f2.vec(), f3.vec()));
    } else {
        f2 = nq > kGeomTol ? UnitVec3::normalized(q) : detail::null_direction(l2i_req, false);
        RhonBasis h = rhon_with_middle(f2);
        f1 = h.f1;
        f3 = h.f3;
    }
    auto proj = [](const UnitVec3& u, const RMat3& l, const UnitVec3& v) {
        return dot(u.vec(), matvec(l, v.vec()));
    };
    double p_cc = core.lam2r;
    double p_ss = -proj(f2p, l2r_req, f2);
    double p_sc = proj(f3p, l2i_req, f1);
    double p_cs = proj(f1p, l2i_req, f3);
    double sum = std::atan2(p_sc + p_cs, p_cc - p_ss);
    double diff = std::atan2(p_sc - p_cs, p_cc + p_ss);
    double alpha_p = 0.5 * (sum + diff), alpha = 0.5 * (sum - diff);
    RewriteOutcome out;
    UnitVec3 af = UnitVec3::normalized(std::cos(alpha) * f1.vec() - std::sin(alpha) * f2.vec());
    UnitVec3 apf =
        UnitVec3::normalized(std::cos(alpha_p) * f1p.vec() - std::sin(alpha_p) * f2p.vec());
    out.replacement = {DcNot{0, af, 1, apf}, DcNot{0, f1, 1, f1p}};  // b'_f = c' exactly
    return detail::finish(detail::pairs_unitary(pr.pairs), std::move(out), pr, 1e-7);
}

// ---------------------------------------------------------------------------
// 3 -> 1 classification and reduction

namespace detail {

inline bool mutually_orthogonal(Vec3 a, Vec3 b, Vec3 c) {
    return perpendicular(a, b) && perpendicular(b, c) && perpendicular(a, c);
}

struct T4Angles {
    KFrame k, kp;
    double lam, phi, lam_p, phi_p;  // lam from (a,b); phi from c in the k frame
    bool no_breach = false;
};

inline T4Angles t4_angles(const std::vector<VecPair>& ps) {
    const auto& [a, ap] = ps[0];
    const auto& [b, bp] = ps[1];
    const auto& [c, cp] = ps[2];
    T4Angles t;
    t.no_breach = norm(cross(a.vec(), b.vec())) > kGeomTol &&
                  norm(cross(b.vec(), c.vec())) > kGeomTol &&
                  norm(cross(ap.vec(), bp.vec())) > kGeomTol &&
                  norm(cross(bp.vec(), cp.vec())) > kGeomTol;
    if (!t.no_breach) return t;
    t.k = k_frame(a, b, c);
    t.kp = k_frame(ap, bp, cp);
    t.lam = std::atan2(-dot(a.vec(), t.k.k2.vec()), dot(a.vec(), t.k.k1.vec()));
    t.phi = std::atan2(dot(c.vec(), t.k.k1.vec()), dot(c.vec(), t.k.k3.vec()));
    t.lam_p = std::atan2(-dot(ap.vec(), t.kp.k2.vec()), dot(ap.vec(), t.kp.k1.vec()));
    t.phi_p = std::atan2(dot(cp.vec(), t.kp.k1.vec()), dot(cp.vec(), t.kp.k3.vec()));
    return t;
}

inline double ang_dist(double a, double b) {
    double d = std::fmod(a - b, 2.0 * M_PI);
    if (d > M_PI) d -= 2.0 * M_PI;
    if (d < -M_PI) d += 2.0 * M_PI;
    return std::abs(d);
}

}  // namespace detail

inline TClass classify_3to1(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 3) throw std::invalid_argument("classify_3to1: need exactly 3 DC-NOTs");
    const auto& [a, ap] = pr.pairs[0];
    const auto& [b, bp] = pr.pairs[1];
    const auto& [c, cp] = pr.pairs[2];
    double vol = triple(a.vec(), b.vec(), c.vec());
    double vol_p = triple(ap.vec(), bp.vec(), cp.vec());
    if (parallel(b.vec(), a.vec()) && parallel(bp.vec(), ap.vec())) return TClass::t1a;
    if (parallel(c.vec(), b.vec()) && parallel(cp.vec(), bp.vec())) return TClass::t1b;
    if (parallel(cp.vec(), bp.vec()) && parallel(bp.vec(), ap.vec()) && std::abs(vol) <= kGeomTol)
        return TClass::t2a;
    if (parallel(c.vec(), b.vec()) && parallel(b.vec(), a.vec()) && std::abs(vol_p) <= kGeomTol)
        return TClass::t2b;
    if (perpendicular(a.vec(), b.vec()) && perpendicular(a.vec(), c.vec()) &&
        perpendicular(ap.vec(), bp.vec()) && perpendicular(ap.vec(), cp.vec()))
        return TClass::t3a;
    if (perpendicular(c.vec(), a.vec()) && perpendicular(c.vec(), b.vec()) &&
        perpendicular(cp.vec(), ap.vec()) && perpendicular(cp.vec(), bp.vec()))
        return TClass::t3b;
    // T4
    detail::T4Angles t = detail::t4_angles(pr.pairs);
    if (!t.no_breach) return TClass::none;
    if (std::abs(dot(cross_fold({a.vec(), b.vec(), b.vec()}), c.vec())) > kGeomTol ||
        std::abs(dot(cross_fold({ap.vec(), bp.vec(), bp.vec()}), cp.vec())) > kGeomTol)
        return TClass::none;
    // |tan lam| = |tan lam'| and |tan phi| = |tan phi'| (cross-multiplied)
    auto tan_eq = [](double x, double y) {
        return std::abs(std::abs(std::sin(x) * std::cos(y)) -
                        std::abs(std::sin(y) * std::cos(x))) <= 1e-8;
    };
    if (!tan_eq(t.lam, t.lam_p) || !tan_eq(t.phi, t.phi_p)) return TClass::none;
    // sign(tan lam tan phi) = -sign(tan lam' tan phi')
    double s = std::sin(t.lam) * std::cos(t.lam) * std::sin(t.phi) * std::cos(t.phi);
    double sp = std::sin(t.lam_p) * std::cos(t.lam_p) * std::sin(t.phi_p) * std::cos(t.phi_p);
    if (std::abs(s) <= 1e-9 && std::abs(sp) <= 1e-9) return TClass::t4;
    if (s * sp < 0 && std::abs(s) > 1e-9 && std::abs(sp) > 1e-9) return TClass::t4;
    return TClass::none;
}

namespace detail {

/// Paulion sigma-product block reduction for the T2 / 3->0 families: all
/// bit-1 vectors parallel to bp. Returns (Q, B0) with L = Q(0)^{n_bp(1)} B0(0).
inline std::pair<CMat, CMat> parallel_side_blocks(const std::vector<VecPair>& ps,
                                                  const UnitVec3& bp) {
    CMat b0 = CMat::identity(2), b1 = CMat::identity(2);
    // matrix order: c-gate leftmost
    for (int k = 2; k >= 0; --k) {
        double eps = dot(ps[k].second.vec(), bp.vec()) >= 0 ? 1.0 : -1.0;
        CMat pauli = paulion(ps[k].first.vec());
        if (eps > 0)
            b1 = b1 * pauli;
        else
            b0 = b0 * pauli;
    }
    return {b1 * b0.adjoint(), b0};
}

inline RewriteResult reduce_t2a(const PairRun& pr, std::vector<VecPair> pairs, bool flipped) {
    const UnitVec3& bp = pairs[1].second;
    auto [q, b0] = parallel_side_blocks(pairs, bp);
    // Q must be a unit Paulion
    Vec3 fvec{0.5 * (q * sigma_x()).trace().real(), 0.5 * (q * sigma_y()).trace().real(),
              0.5 * (q * sigma_z()).trace().real()};
    RewriteOutcome out;
    if (frob_dist(q, paulion(fvec)) > 1e-7 || std::abs(norm(fvec) - 1.0) > 1e-7) {
        RewriteResult bad;
        bad.status = RewriteStatus::numeric_failure;
        return bad;
    }
    out.replacement = {DcNot{0, UnitVec3::normalized(fvec), 1, bp}};
    for (Gate& g : u2_gates(0, b0)) out.pre_locals.push_back(g);
    if (flipped) flip_outcome_wires(out);
    return finish(pairs_unitary(pr.pairs), std::move(out), pr, 1e-7);
}

inline RewriteResult reduce_t3a(const PairRun& pr, std::vector<VecPair> pairs, bool reversed) {
    const auto& [a, ap] = pairs[0];
    const auto& [b, bp] = pairs[1];
    const auto& [c, cp] = pairs[2];
    double alpha = std::atan2(-dot(c.vec(), cross(a.vec(), b.vec())), dot(c.vec(), b.vec()));
    double alpha_p =
        std::atan2(-dot(cp.vec(), cross(ap.vec(), bp.vec())), dot(cp.vec(), bp.vec()));
    RewriteOutcome out;
    out.replacement = {DcNot{0, a, 1, ap}};
    out.pre_locals = {LocalRot{0, b, -alpha_p / 2}, LocalRot{0, a, alpha / 2},
                      LocalRot{1, bp, -alpha / 2}, LocalRot{1, ap, alpha_p / 2}};
    if (reversed) out = reverse_outcome(out);
    std::vector<VecPair> orig = reversed ? std::vector<VecPair>(pairs.rbegin(), pairs.rend())
                                         : pairs;
    return finish(pairs_unitary(orig), std::move(out), pr, 1e-7);
}

inline RewriteResult reduce_t4(const PairRun& pr) {
    const std::vector<VecPair>& pairs = pr.pairs;
    T4Angles t = t4_angles(pairs);
    double lam = t.lam, phi = t.phi;
    // decide the table cell: lam' ~ lam (q-type) or pi - lam (p-type)
    bool qtype;
    if (ang_dist(t.lam_p, lam) < 1e-7)
        qtype = true;
    else if (ang_dist(t.lam_p, M_PI - lam) < 1e-7)
        qtype = false;
    else
        return {};
    bool flip_a = false, flip_c = false;
    if (qtype) {
        if (ang_dist(t.phi_p, -phi) < 1e-7)
            flip_c = false;
        else if (ang_dist(t.phi_p, M_PI - phi) < 1e-7)
            flip_c = true;
        else
            return {};
    } else {
        flip_a = true;  // a' is -p-type when lam' = pi - lam
        if (ang_dist(t.phi_p, phi) < 1e-7)
            flip_c = false;
        else if (ang_dist(t.phi_p, M_PI + phi) < 1e-7)
            flip_c = true;
        else
            return {};
    }

    auto mapk = [&](Vec3 v) {
        return v.x * t.k.k1.vec() + v.y * t.k.k2.vec() + v.z * t.k.k3.vec();
    };
    auto mapkp = [&](Vec3 v) {
        return v.x * t.kp.k1.vec() + v.y * t.kp.k2.vec() + v.z * t.kp.k3.vec();
    };
    double cl = std::cos(lam), sl = std::sin(lam);
    double cf = std::cos(phi), sf = std::sin(phi);
    Vec3 pzx{sf, 0, cf};          // p_zx^phi in frame coordinates (x=k1, y=k2, z=k3)
    Vec3 qzx{-sf, 0, cf};
    Vec3 qxy{cl, -sl, 0};
    Vec3 pxy{cl, sl, 0};
    double alpha = 0.5 * (M_PI_2 - phi);
    double beta = M_PI_2 - alpha;
    auto refl = [&](double ang, Vec3 axis_a, Vec3 axis_b, bool primed) {
        // (cos(ang) sigma_u + sin(ang) sigma_v) as a mapped 2x2 matrix
        Vec3 v = std::cos(ang) * axis_a + std::sin(ang) * axis_b;
        return paulion(primed ? mapkp(v) : mapk(v));
    };
    const Vec3 xhat{1, 0, 0}, zhat{0, 0, 1};

    RewriteOutcome out;
    if (qtype) {
        // C_qq via the split similarity-transform identity
        Vec3 af = cl * pzx + sl * Vec3{0, 1, 0};
        Vec3 apf = cl * qzx + sl * Vec3{0, 1, 0};
        out.replacement = {DcNot{0, UnitVec3::normalized(mapk(af)), 1,
                                 UnitVec3::normalized(mapkp(apf))}};
        CMat u = refl(alpha, xhat, zhat, false) *
                 (std::cos(alpha) * paulion(mapk(qxy)) + std::sin(alpha) * paulion(mapk(zhat)));
        CMat up = refl(beta, xhat, zhat, true) *
                  (std::cos(beta) * paulion(mapkp(qxy)) + std::sin(beta) * paulion(mapkp(zhat)));
        for (Gate& g : u2_gates(0, u)) out.pre_locals.push_back(g);
        for (Gate& g : u2_gates(1, up)) out.pre_locals.push_back(g);
    } else {
        // C_pp via the second split identity; note the wire exchange of the
        // final defining vectors
        Vec3 af = cl * pzx + sl * Vec3{0, 1, 0};
        Vec3 apf = cl * qzx + sl * Vec3{0, 1, 0};
        out.replacement = {DcNot{0, UnitVec3::normalized(mapk(apf)), 1,
                                 UnitVec3::normalized(mapkp(af))}};
        CMat u = refl(alpha, xhat, zhat, true) *
                 (std::cos(alpha) * paulion(mapkp(qxy)) + std::sin(alpha) * paulion(mapkp(zhat)));
        CMat up = refl(beta, xhat, zhat, false) *
                  (std::cos(beta) * paulion(mapk(qxy)) + std::sin(beta) * paulion(mapk(zhat)));
        // bit0 gets U' sigma_z, bit1 gets U sigma_{qxy} sigma_x
        CMat loc0 = up * paulion(mapk(zhat));
        CMat loc1 = u * paulion(mapkp(qxy)) * paulion(mapkp(xhat));
        for (Gate& g : u2_gates(0, loc0)) out.pre_locals.push_back(g);
        for (Gate& g : u2_gates(1, loc1)) out.pre_locals.push_back(g);
        for (Gate& g : paulion_gates(0, UnitVec3::normalized(mapk(zhat))))
            out.post_locals.push_back(g);
    }
    // sign flips exported as Paulion locals: a' flip compensates on the right,
    // c' flip on the left (both on bit 0 with the unprimed vector)
    if (flip_a)
        for (Gate& g : paulion_gates(0, pairs[0].first)) out.pre_locals.push_back(g);
    if (flip_c)
        for (Gate& g : paulion_gates(0, pairs[2].first)) out.post_locals.push_back(g);
    return finish(pairs_unitary(pairs), std::move(out), pr, 1e-7);
}

}  // namespace detail

inline RewriteResult reduce_3to1(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 3) throw std::invalid_argument("reduce_3to1: need exactly 3 DC-NOTs");
    TClass tag = classify_3to1(run);
    const auto& pairs = pr.pairs;
    switch (tag) {
        case TClass::t1a: {
            // first two gates annihilate
            std::array<DcNot, 2> sub{DcNot{0, pairs[0].first, 1, pairs[0].second},
                                     DcNot{0, pairs[1].first, 1, pairs[1].second}};
            RewriteResult r20 = reduce_2to0(sub);
            if (!r20.ok()) return r20;
            RewriteOutcome out;
            out.pre_locals = r20.outcome.pre_locals;
            out.replacement = {DcNot{0, pairs[2].first, 1, pairs[2].second}};
            return detail::finish(detail::pairs_unitary(pairs), std::move(out), pr, 1e-7);
        }
        case TClass::t1b: {
            std::array<DcNot, 2> sub{DcNot{0, pairs[1].first, 1, pairs[1].second},
                                     DcNot{0, pairs[2].first, 1, pairs[2].second}};
            RewriteResult r20 = reduce_2to0(sub);
            if (!r20.ok()) return r20;
            RewriteOutcome out;
            out.post_locals = r20.outcome.pre_locals;
            out.replacement = {DcNot{0, pairs[0].first, 1, pairs[0].second}};
            return detail::finish(detail::pairs_unitary(pairs), std::move(out), pr, 1e-7);
        }
        case TClass::t2a:
            return detail::reduce_t2a(pr, pairs, false);
        case TClass::t2b:
            return detail::reduce_t2a(pr, detail::flip_pairs(pairs), true);
        case TClass::t3a:
            return detail::reduce_t3a(pr, pairs, false);
        case TClass::t3b:
            return detail::reduce_t3a(pr, {pairs.rbegin(), pairs.rend()}, true);
        case TClass::t4:
            return detail::reduce_t4(pr);
        default:
            return {};
    }
}

inline RewriteResult reduce_3to0(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 3) throw std::invalid_argument("reduce_3to0: need exactly 3 DC-NOTs");
    const auto& pairs = pr.pairs;
    auto v = [&](int k, bool primed) { return primed ? pairs[k].second.vec() : pairs[k].first.vec(); };
    bool tb = detail::mutually_orthogonal(v(0, false), v(1, false), v(2, false)) &&
              parallel(v(2, true), v(1, true)) && parallel(v(1, true), v(0, true));
    bool ta = detail::mutually_orthogonal(v(0, true), v(1, true), v(2, true)) &&
              parallel(v(2, false), v(1, false)) && parallel(v(1, false), v(0, false));
    if (!ta && !tb) return {};
    std::vector<VecPair> ps = pairs;
    bool flipped = false;
    if (ta && !tb) {
        ps = detail::flip_pairs(ps);
        flipped = true;
    }
    const UnitVec3& bp = ps[1].second;
    auto [q, b0] = detail::parallel_side_blocks(ps, bp);
    cplx scalar = q(0, 0);
    RewriteOutcome out;
    if (frob_dist(q, scalar * CMat::identity(2)) > 1e-7 || std::abs(std::abs(scalar) - 1.0) > 1e-7) {
        RewriteResult bad;
        bad.status = RewriteStatus::numeric_failure;
        return bad;
    }
    double gamma = std::arg(scalar);
    // scalar^{n_bp(1)} = e^{i gamma/2} e^{-i(gamma/2) sigma_bp(1)}
    out.pre_locals.push_back(GlobalPhase{gamma / 2});
    out.pre_locals.push_back(LocalRot{1, bp, -gamma / 2});
    for (Gate& g : u2_gates(0, b0)) out.pre_locals.push_back(g);
    if (flipped) detail::flip_outcome_wires(out);
    return detail::finish(detail::pairs_unitary(pairs), std::move(out), pr, 1e-7);
}

// ---------------------------------------------------------------------------
// Controlled-U synthesis and flipping

/// Two DC-NOTs realizing [e^{i theta sigma_axis}(wi)]^{n_control(wj)} exactly.
inline std::array<DcNot, 2> controlled_u_to_dcnots(const UnitVec3& axis, double theta, int wi = 0,
                                                   int wj = 1, const UnitVec3& control = kUz) {
    UnitVec3 b = complete_rhon(axis).f2;
    UnitVec3 a = UnitVec3::normalized(std::cos(theta) * b.vec() +
                                      std::sin(theta) * cross(axis.vec(), b.vec()));
    return {DcNot{wi, a, wj, control}, DcNot{wi, b, wj, control}};
}

/// Exchange control and target of a controlled rotation:
/// [e^{i theta sigma_target}(wj)]^{n_control(wi)} rewritten with the roles
/// swapped plus two compensating local rotations. Chronological gate run.
inline std::vector<Gate> flip_controlled_u(const UnitVec3& control_vec, double theta,
                                           const UnitVec3& target_axis, int wi = 0, int wj = 1) {
    std::vector<Gate> out;
    out.push_back(LocalRot{wj, target_axis, theta / 2});
    out.push_back(LocalRot{wi, control_vec, -theta / 2});
    for (const DcNot& d : controlled_u_to_dcnots(control_vec, theta, wi, wj, target_axis))
        out.push_back(d);
    return out;
}

// ---------------------------------------------------------------------------
// Deflation

namespace detail {

/// Core of the deflation identity: two controlled rotations with arbitrary
/// single-qubit control vectors dprime (left) and aprime (right), expressed
/// through the 4-DC-NOT wedge form and the G2 diagonalization tail.
/// `l_total` is the exact unitary the outcome must certify against.
inline RewriteResult deflate_core(double theta_l, const UnitVec3& axis_l, const UnitVec3& dprime,
                                  double theta_r, const UnitVec3& axis_r, const UnitVec3& aprime,
                                  const CMat& l_total, const PairRun& pr,
                                  RewriteOutcome seed_out, double tol) {
    Vec3 wl = axis_l.vec(), wr = axis_r.vec();
    UnitVec3 t = norm(cross(wl, wr)) > kGeomTol ? UnitVec3::normalized(cross(wl, wr))
                                                : complete_rhon(axis_l).f2;
    UnitVec3 d = UnitVec3::normalized(std::cos(theta_l) * t.vec() -
                                      std::sin(theta_l) * cross(wl, t.vec()));
    UnitVec3 a = UnitVec3::normalized(std::cos(theta_r) * t.vec() +
                                      std::sin(theta_r) * cross(wr, t.vec()));
    std::vector<VecPair> wedge = {{a, aprime}, {t, aprime}, {t, dprime}, {d, dprime}};
    CMat g4 = g2_closed(4, wedge);
    InvariantParts parts = split_parts(g4);
    double lam2r = -parts.lam_r;
    RMat3 l2i_req = -1.0 * gamma_rep(parts.Lam_i);

    Vec3 apxdp = cross(aprime.vec(), dprime.vec());
    double s_phi_p = norm(apxdp);
    UnitVec3 f2 = d;
    UnitVec3 f2p = s_phi_p > kGeomTol ? UnitVec3::normalized(apxdp) : complete_rhon(dprime).f2;
    double ssaa = dot(cross(a.vec(), t.vec()), d.vec()) * s_phi_p;

    PrincipalParams2 p = g2_tail(lam2r, ssaa, f2, f2p, l2i_req);
    RewriteOutcome out = std::move(seed_out);
    vectors_from_params2(p, out);
    return finish(l_total, std::move(out), pr, tol);
}

}  // namespace detail

/// Deflation identity: controlled-e^{i theta_L sigma_axisL} then A on the
/// control wire then controlled-e^{i theta_R sigma_axisR} (controls on the z
/// axis of the higher wire) reduces to two DC-NOTs plus locals.
inline RewriteResult deflate(double theta_l, const UnitVec3& axis_l, const CMat& a_mid,
                             double theta_r, const UnitVec3& axis_r, int wi = 0, int wj = 1) {
    if (a_mid.dim() != 2 || !is_unitary(a_mid) || std::abs(det(a_mid) - cplx{1, 0}) > 1e-10)
        throw std::invalid_argument("deflate: middle factor must be in SU(2)");
    detail::PairRun pr;
    pr.wlo = 0;
    pr.whi = 1;
    // control vector of the right CU after pushing A through: sigma_v = A sigma_z A^
    CMat av = a_mid * sigma_z() * a_mid.adjoint();
    Vec3 v{0.5 * (av * sigma_x()).trace().real(), 0.5 * (av * sigma_y()).trace().real(),
           0.5 * (av * sigma_z()).trace().real()};
    UnitVec3 vprime = UnitVec3::normalized(v);

    auto cu = [&](double theta, const UnitVec3& axis) {
        CMat rot = rot2(axis, theta);
        CMat n1 = embed1(0.5 * (CMat::identity(2) - sigma_z()), 1, 2);
        CMat proj0 = CMat::identity(4) - n1;
        // [rot(0)]^{n(1)} = proj0 + rot (x) n1-part
        return proj0 + embed1(rot, 0, 2) * n1;
    };
    CMat l_total = cu(theta_l, axis_l) * embed1(a_mid, 1, 2) * cu(theta_r, axis_r);
    RewriteResult res = detail::deflate_core(theta_l, axis_l, kUz, theta_r, axis_r, vprime,
                                             l_total, pr, RewriteOutcome{}, 1e-7);
    detail::remap_outcome(res.outcome, wi, wj);
    return res;
}

// ---------------------------------------------------------------------------
// Opening a breach and the 4 -> 3 pipeline

namespace detail {

/// Residuals of the four breach-opening constraints at (t, t').
struct BreachConstraints {
    Vec3 u_r, u_l;  // t'-constraints: u . t' = 0
    // v-vectors depend on t'; recomputed per evaluation
    const std::vector<VecPair>* pairs;
};

inline Vec3 breach_v_vector(const VecPair& p_pair, const VecPair& q_pair, const UnitVec3& tp) {
    const UnitVec3 &pv = p_pair.first, &pvp = p_pair.second;
    const UnitVec3 &qv = q_pair.first, &qvp = q_pair.second;
    KFrame f = k_frame(pvp, qvp, tp);
    double s_phi = dot(tp.vec(), f.k1.vec());
    double c_phi = dot(tp.vec(), f.k3.vec());
    return c_phi * dot(pv.vec(), qv.vec()) * cross(pv.vec(), qv.vec()) -
           f.s_lam * f.c_lam * s_phi * qv.vec();
}

inline std::array<double, 4> breach_residuals(const std::vector<VecPair>& ps, const UnitVec3& t,
                                              const UnitVec3& tp) {
    Vec3 ur = cross_fold({ps[0].second.vec(), ps[1].second.vec(), ps[1].second.vec()});
    Vec3 ul = cross_fold({ps[3].second.vec(), ps[2].second.vec(), ps[2].second.vec()});
    Vec3 vr = breach_v_vector(ps[0], ps[1], tp);
    Vec3 vl = breach_v_vector(ps[3], ps[2], tp);
    return {dot(ur, tp.vec()), dot(ul, tp.vec()), dot(vr, t.vec()), dot(vl, t.vec())};
}

inline UnitVec3 sphere_point(double z, double golden_angle_index) {
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden_angle_index * 2.399963229728653;  // golden angle
    return UnitVec3::normalized(Vec3{r * std::cos(phi), r * std::sin(phi), z});
}

/// Pick a unit vector orthogonal to both arguments, with deterministic
/// fallbacks when they are parallel or vanish.
inline UnitVec3 orthogonal_to(Vec3 u, Vec3 v) {
    Vec3 c = cross(u, v);
    if (norm(c) > 1e-9) return UnitVec3::normalized(c);
    Vec3 w = norm(u) > norm(v) ? u : v;
    if (norm(w) > 1e-9) return complete_rhon(UnitVec3::normalized(w)).f2;
    return kUz;
}

}  // namespace detail

/// Open a breach in a 4-DC-NOT run: rewrite it as 4 DC-NOTs whose middle pair
/// shares the solved t' on the higher wire.
inline RewriteResult open_breach(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 4) throw std::invalid_argument("open_breach: need exactly 4 DC-NOTs");
    const std::vector<VecPair>& ps = pr.pairs;

    // Generic closed-form solution: t' orthogonal to both t'-constraint
    // vectors, then t orthogonal to both induced v-vectors.
    Vec3 ur = cross_fold({ps[0].second.vec(), ps[1].second.vec(), ps[1].second.vec()});
    Vec3 ul = cross_fold({ps[3].second.vec(), ps[2].second.vec(), ps[2].second.vec()});
    UnitVec3 tp = detail::orthogonal_to(ur, ul);
    UnitVec3 t = detail::orthogonal_to(detail::breach_v_vector(ps[0], ps[1], tp),
                                       detail::breach_v_vector(ps[3], ps[2], tp));
    auto max_resid = [&](const UnitVec3& tv, const UnitVec3& tpv) {
        auto r = detail::breach_residuals(ps, tv, tpv);
        double m = 0;
        for (double x : r) m = std::max(m, std::abs(x));
        return m;
    };
    if (max_resid(t, tp) > 1e-9) {
        // Damped least squares over spherical angles, 32 deterministic starts.
        auto from_angles = [](double th, double ph) {
            return UnitVec3::normalized(
                Vec3{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)});
        };
        bool found = false;
        for (int s = 0; s < 32 && !found; ++s) {
            double z1 = -1.0 + 2.0 * ((s % 8) + 0.5) / 8.0;
            double z2 = -1.0 + 2.0 * ((s / 8) + 0.5) / 4.0;
            UnitVec3 c1 = detail::sphere_point(z1, s);
            UnitVec3 c2 = detail::sphere_point(z2, s + 11);
            double x[4] = {std::acos(std::clamp(c1.z(), -1.0, 1.0)), std::atan2(c1.y(), c1.x()),
                           std::acos(std::clamp(c2.z(), -1.0, 1.0)), std::atan2(c2.y(), c2.x())};
            double lambda = 1e-3;
            for (int it = 0; it < 120; ++it) {
                UnitVec3 tv = from_angles(x[0], x[1]), tpv = from_angles(x[2], x[3]);
                auto r0 = detail::breach_residuals(ps, tv, tpv);
                double f0 = 0;
                for (double rr : r0) f0 += rr * rr;
                if (std::sqrt(f0) < 1e-12 || max_resid(tv, tpv) <= 1e-9) break;
                double jac[4][4];
                const double h = 1e-7;
                for (int c = 0; c < 4; ++c) {
                    double xs[4] = {x[0], x[1], x[2], x[3]};
                    xs[c] += h;
                    auto r1 = detail::breach_residuals(ps, from_angles(xs[0], xs[1]),
                                                       from_angles(xs[2], xs[3]));
                    for (int rrow = 0; rrow < 4; ++rrow) jac[rrow][c] = (r1[rrow] - r0[rrow]) / h;
                }
                // solve (J^T J + lambda I) dx = -J^T r
                double m[4][5] = {};
                for (int i = 0; i < 4; ++i) {
                    for (int j = 0; j < 4; ++j) {
                        for (int k = 0; k < 4; ++k) m[i][j] += jac[k][i] * jac[k][j];
                    }
                    m[i][i] += lambda;
                    for (int k = 0; k < 4; ++k) m[i][4] -= jac[k][i] * r0[k];
                }
                for (int col = 0; col < 4; ++col) {  // gaussian elimination
                    int piv = col;
                    for (int rrow = col + 1; rrow < 4; ++rrow)
                        if (std::abs(m[rrow][col]) > std::abs(m[piv][col])) piv = rrow;
                    if (std::abs(m[piv][col]) < 1e-14) break;
                    std::swap(m[piv], m[col]);
                    for (int rrow = 0; rrow < 4; ++rrow) {
                        if (rrow == col) continue;
                        double fac = m[rrow][col] / m[col][col];
                        for (int cc = col; cc < 5; ++cc) m[rrow][cc] -= fac * m[col][cc];
                    }
                }
                for (int i = 0; i < 4; ++i)
                    if (std::abs(m[i][i]) > 1e-14) x[i] += m[i][4] / m[i][i];
            }
            UnitVec3 tv = from_angles(x[0], x[1]), tpv = from_angles(x[2], x[3]);
            if (max_resid(tv, tpv) <= 1e-9) {
                t = tv;
                tp = tpv;
                found = true;
            }
        }
        if (!found) {
            RewriteResult res;
            res.status = RewriteStatus::no_solution_found;
            return res;
        }
    }

    // Right half: [pR, qR, (t,t')] with t' persisting.
    std::array<DcNot, 3> right{DcNot{0, ps[0].first, 1, ps[0].second},
                               DcNot{0, ps[1].first, 1, ps[1].second}, DcNot{0, t, 1, tp}};
    RewriteResult rh = reduce_3to2_persistent(right, tp);
    if (!rh.ok()) {
        RewriteResult res;
        res.status = rh.status == RewriteStatus::not_applicable ? RewriteStatus::numeric_failure
                                                                : rh.status;
        return res;
    }
    // Left half: reversed [pL, qL, (t,t')] reversed = [(t,t'), qL, pL]; apply
    // persistence to [pL', qL', (t,t')] in reversed time and un-reverse.
    std::array<DcNot, 3> left_rev{DcNot{0, ps[3].first, 1, ps[3].second},
                                  DcNot{0, ps[2].first, 1, ps[2].second}, DcNot{0, t, 1, tp}};
    RewriteResult lh_rev = reduce_3to2_persistent(left_rev, tp);
    if (!lh_rev.ok()) {
        RewriteResult res;
        res.status = lh_rev.status == RewriteStatus::not_applicable
                         ? RewriteStatus::numeric_failure
                         : lh_rev.status;
        return res;
    }
    RewriteOutcome lh = detail::reverse_outcome(lh_rev.outcome);

    RewriteOutcome out;
    out.pre_locals = rh.outcome.pre_locals;
    out.post_locals = lh.post_locals;
    out.replacement = rh.outcome.replacement;
    for (const DcNot& d : lh.replacement) out.replacement.push_back(d);
    return detail::finish(detail::pairs_unitary(ps), std::move(out), pr, 1e-6);
}

/// Reduce any 4-DC-NOT run to at most 3 DC-NOTs: open a breach, merge the
/// breach pair into a controlled rotation, deflate it against a neighbor.
inline RewriteResult reduce_4to3(std::span<const DcNot> run) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 4) throw std::invalid_argument("reduce_4to3: need exactly 4 DC-NOTs");
    RewriteResult ob = open_breach(run);
    if (!ob.ok()) return ob;
    // breach pair: replacement[1] and replacement[2] share t' on bit 1;
    // bring the outcome back into the embedded 0/1 space
    RewriteOutcome& b = ob.outcome;
    detail::unmap_outcome(b, pr.wlo, pr.whi);
    UnitVec3 q_r = b.replacement[1].vec_on(0), q_l = b.replacement[2].vec_on(0);
    UnitVec3 tprime = b.replacement[1].vec_on(1);
    AxisAngle mid = su2_log(paulion(q_l.vec()) * paulion(q_r.vec()));

    RewriteOutcome out;
    CMat l_total = detail::pairs_unitary(pr.pairs);
    if (std::abs(std::sin(mid.theta)) < 1e-12 && std::cos(mid.theta) > 0) {
        // breach pair is the identity
        out.replacement = {b.replacement[0], b.replacement[3]};
        out.pre_locals = b.pre_locals;
        out.post_locals = b.post_locals;
        return detail::finish(l_total, std::move(out), pr, 1e-6);
    }
    // right neighbor as a controlled rotation: DCNOT(p,p') =
    // i^{n_p'(1)} [e^{-i pi/2 sigma_p}(0)]^{n_p'(1)}
    UnitVec3 p_r = b.replacement[0].vec_on(0), pp_r = b.replacement[0].vec_on(1);
    CMat cu_mid = detail::pair_unitary({q_r, tprime});
    cu_mid = detail::pair_unitary({q_l, tprime}) * cu_mid;
    CMat cu_right = detail::pair_unitary({p_r, pp_r});
    CMat half_l = cu_mid * cu_right;  // the part deflate must reproduce

    RewriteOutcome seed;
    RewriteResult defl = detail::deflate_core(mid.theta, mid.axis, tprime, -M_PI_2, p_r, pp_r,
                                              half_l, pr, std::move(seed), 1e-6);
    if (!defl.ok()) return defl;
    detail::unmap_outcome(defl.outcome, pr.wlo, pr.whi);

    out.replacement = defl.outcome.replacement;
    out.replacement.push_back(b.replacement[3]);
    // order: defl.pre, then defl covers [repl01]; b's locals wrap everything
    out.pre_locals = b.pre_locals;
    out.pre_locals.insert(out.pre_locals.end(), defl.outcome.pre_locals.begin(),
                          defl.outcome.pre_locals.end());
    out.post_locals = defl.outcome.post_locals;
    out.post_locals.insert(out.post_locals.end(), b.post_locals.begin(), b.post_locals.end());
    return detail::finish(l_total, std::move(out), pr, 1e-6);
}

// ---------------------------------------------------------------------------
// Identity catalog

/// Swapper as 3 DC-NOTs: for perpendicular a, b the palindrome
/// (a,b), (b,a), (a,b) equals SWAP exactly.
inline std::array<DcNot, 3> swapper_expansion(const UnitVec3& a, const UnitVec3& b, int wi = 0,
                                              int wj = 1) {
    if (!perpendicular(a.vec(), b.vec()))
        throw std::invalid_argument("swapper_expansion: vectors must be perpendicular");
    return {DcNot{wi, a, wj, b}, DcNot{wi, b, wj, a}, DcNot{wi, a, wj, b}};
}

/// Dressed swapper: bottom vectors transported by U (a' with sigma_a' =
/// U^ sigma_a U). Returns the 3 DC-NOTs plus trailing locals U(wi), U^(wj).
inline std::pair<std::array<DcNot, 3>, std::vector<Gate>> swapper_expansion_dressed(
    const UnitVec3& a, const UnitVec3& b, const CMat& u, int wi = 0, int wj = 1) {
    if (!perpendicular(a.vec(), b.vec()))
        throw std::invalid_argument("swapper_expansion_dressed: vectors must be perpendicular");
    auto transport = [&](const UnitVec3& v) {
        CMat m = u.adjoint() * paulion(v.vec()) * u;
        Vec3 w{0.5 * (m * sigma_x()).trace().real(), 0.5 * (m * sigma_y()).trace().real(),
               0.5 * (m * sigma_z()).trace().real()};
        return UnitVec3::normalized(w);
    };
    UnitVec3 apv = transport(a), bpv = transport(b);
    std::array<DcNot, 3> gates{DcNot{wi, a, wj, bpv}, DcNot{wi, b, wj, apv},
                               DcNot{wi, a, wj, bpv}};
    std::vector<Gate> locals;
    for (Gate& g : u2_gates(wi, u)) locals.push_back(g);
    for (Gate& g : u2_gates(wj, u.adjoint())) locals.push_back(g);
    return {gates, locals};
}

/// 2/3-swapper rewrite: a doubly-foiled pair picks up free angles alpha,
/// alpha' on its left gate at the cost of trailing locals.
inline RewriteResult two_thirds_swap(std::span<const DcNot> run, double alpha, double alpha_p) {
    detail::PairRun pr = detail::pair_run(run);
    if (pr.pairs.size() != 2)
        throw std::invalid_argument("two_thirds_swap: need exactly 2 DC-NOTs");
    const auto& [a, ap] = pr.pairs[0];
    const auto& [b, bp] = pr.pairs[1];
    if (!perpendicular(a.vec(), b.vec()) || !perpendicular(ap.vec(), bp.vec())) return {};
    Vec3 ab = cross(a.vec(), b.vec()), apbp = cross(ap.vec(), bp.vec());
    UnitVec3 bf = UnitVec3::normalized(std::cos(alpha) * b.vec() - std::sin(alpha) * ab);
    UnitVec3 bpf = UnitVec3::normalized(std::cos(alpha_p) * bp.vec() - std::sin(alpha_p) * apbp);
    RewriteOutcome out;
    out.replacement = {DcNot{0, a, 1, ap}, DcNot{0, bf, 1, bpf}};
    out.pre_locals = {LocalRot{0, b, -alpha_p / 2}, LocalRot{0, a, alpha / 2},
                      LocalRot{1, bp, -alpha / 2}, LocalRot{1, ap, alpha_p / 2}};
    CMat l = detail::pairs_unitary(pr.pairs);
    CMat upre = gates_unitary(out.pre_locals, 2);
    CMat urepl = detail::replacement_unitary(out.replacement, 2);
    out.residual = frob_dist(l, urepl * upre);
    RewriteResult res;
    res.status = out.residual <= 1e-9 ? RewriteStatus::applied : RewriteStatus::numeric_failure;
    detail::remap_outcome(out, pr.wlo, pr.whi);
    res.outcome = std::move(out);
    return res;
}

/// 1/3-swapper identity in the standard basis: both sides as chronological
/// gate runs on wires (0, 1).
inline std::pair<std::vector<Gate>, std::vector<Gate>> one_third_swap(double alpha,
                                                                      double alpha_p) {
    PQVectors qa(kUx, kUy, alpha), qap(kUx, kUy, alpha_p);
    PQVectors pa(kUz, kUy, alpha), pap(kUz, kUy, alpha_p);
    std::vector<Gate> lhs = {DcNot{0, qa.q, 1, qap.q}, DcNot{0, kUx, 1, kUx}};
    std::vector<Gate> rhs = {LocalRot{0, kUz, -alpha / 2}, LocalRot{0, kUx, alpha_p / 2},
                             LocalRot{1, kUz, -alpha_p / 2}, LocalRot{1, kUx, alpha / 2},
                             DcNot{0, pap.p, 1, pa.p}, DcNot{0, kUz, 1, kUz}};
    return {lhs, rhs};
}

/// DC-NOT similarity transformation identity: both sides as gate runs.
inline std::pair<std::vector<Gate>, std::vector<Gate>> sim_trans_identity(double alpha,
                                                                          double lam) {
    auto paulion_pair = [](int wire, Vec3 v) {
        std::vector<Gate> g = paulion_gates(wire, UnitVec3::normalized(v));
        return g;
    };
    Vec3 mid0{std::cos(alpha), 0, std::sin(alpha)};
    Vec3 mid1{std::sin(alpha), 0, std::cos(alpha)};
    std::vector<Gate> lhs = {DcNot{0, kUx, 1, kUx}};
    for (Gate& g : paulion_pair(0, mid0)) lhs.push_back(g);
    for (Gate& g : paulion_pair(1, mid1)) lhs.push_back(g);
    lhs.push_back(DcNot{0, kUx, 1, kUx});

    PQVectors q(kUx, kUy, lam);
    Vec3 rmid0 = std::cos(alpha) * q.q.vec() + std::sin(alpha) * kZhat;
    Vec3 rmid1 = std::sin(alpha) * q.q.vec() + std::cos(alpha) * kZhat;
    std::vector<Gate> rhs = {DcNot{0, q.q, 1, q.q}};
    for (Gate& g : paulion_pair(0, rmid0)) rhs.push_back(g);
    for (Gate& g : paulion_pair(1, rmid1)) rhs.push_back(g);
    rhs.push_back(DcNot{0, q.q, 1, q.q});
    return {lhs, rhs};
}

/// Split similarity-transform identities (first and second form), as gate
/// runs in the standard basis. variant 1: doubled q's on the lower wire;
/// variant 2: mixed q/p.
inline std::pair<std::vector<Gate>, std::vector<Gate>> split_sim_trans_identity(double phi,
                                                                                double lam,
                                                                                int variant) {
    PQVectors zx(kUz, kUx, phi);
    PQVectors xy(kUx, kUy, lam);
    double alpha = 0.5 * (M_PI_2 - phi);
    double beta = M_PI_2 - alpha;
    CMat qxy_p = paulion(xy.q.vec());
    CMat u = (std::cos(alpha) * sigma_x() + std::sin(alpha) * sigma_z()) *
             (std::cos(alpha) * qxy_p + std::sin(alpha) * sigma_z());
    CMat up = (std::cos(beta) * sigma_x() + std::sin(beta) * sigma_z()) *
              (std::cos(beta) * qxy_p + std::sin(beta) * sigma_z());
    UnitVec3 af = UnitVec3::normalized(std::cos(lam) * zx.p.vec() + std::sin(lam) * kYhat);
    UnitVec3 apf = UnitVec3::normalized(std::cos(lam) * zx.q.vec() + std::sin(lam) * kYhat);
    if (variant == 1) {
        std::vector<Gate> lhs = {DcNot{0, xy.q, 1, xy.q}, DcNot{0, kUx, 1, kUx},
                                 DcNot{0, zx.p, 1, zx.q}};
        std::vector<Gate> rhs;
        for (Gate& g : u2_gates(0, u)) rhs.push_back(g);
        for (Gate& g : u2_gates(1, up)) rhs.push_back(g);
        rhs.push_back(DcNot{0, af, 1, apf});
        return {lhs, rhs};
    }
    std::vector<Gate> lhs = {DcNot{0, xy.q, 1, xy.p}, DcNot{0, kUx, 1, kUx},
                             DcNot{0, zx.p, 1, zx.p}};
    std::vector<Gate> rhs;
    CMat loc0 = up * sigma_z();
    CMat loc1 = u * qxy_p * sigma_x();
    for (Gate& g : u2_gates(0, loc0)) rhs.push_back(g);
    for (Gate& g : u2_gates(1, loc1)) rhs.push_back(g);
    rhs.push_back(DcNot{0, apf, 1, af});
    for (Gate& g : paulion_gates(0, kUz)) rhs.push_back(g);
    return {lhs, rhs};
}

}  // namespace qckt
