#pragma once

#include <span>
#include <vector>

#include "qckt/rewrite2q.hpp"

namespace qckt {

/// A mobile DC-NOT run adjacent to a static DC-NOT on an overlapping pair.
/// The two pairs share exactly one wire. mobile_first gives the chronological
/// order: true means the mobile run acts before the static gate.
struct PassThroughContext {
    std::vector<DcNot> mobile_run;
    DcNot static_gate;
    bool mobile_first = true;

    int shared_wire() const {
        for (int w : {static_gate.wire_i, static_gate.wire_j})
            if (mobile_run.at(0).touches(w)) return w;
        throw std::invalid_argument("PassThroughContext: pairs share no wire");
    }
};

namespace detail {

inline CMat context_unitary(const PassThroughContext& ctx) {
    std::vector<Gate> gates;
    if (ctx.mobile_first) {
        for (const DcNot& d : ctx.mobile_run) gates.push_back(d);
        gates.push_back(ctx.static_gate);
    } else {
        gates.push_back(ctx.static_gate);
        for (const DcNot& d : ctx.mobile_run) gates.push_back(d);
    }
    return gates_unitary(gates, 3);
}

/// 3-qubit analog of certify2: factor the remaining right-hand slack.
inline RewriteStatus certify3(const CMat& l, RewriteOutcome& out, double tol) {
    CMat upre = gates_unitary(out.pre_locals, 3);
    CMat upost = gates_unitary(out.post_locals, 3);
    CMat urepl = replacement_unitary(out.replacement, 3);
    CMat known = upost * urepl * upre;
    CMat slack = known.adjoint() * l;
    if (frob_dist(slack, CMat::identity(8)) > 1e-13) {
        FactorResult f = factor_tensor_product(slack, 3);
        if (!f.ok) {
            out.residual = f.residual;
            return RewriteStatus::numeric_failure;
        }
        std::vector<Gate> fresh;
        if (std::abs(f.phase.theta) > 1e-15) fresh.push_back(GlobalPhase{f.phase.theta});
        for (int w = 0; w < 3; ++w)
            for (Gate& g : u2_gates(w, f.factors[w])) fresh.push_back(g);
        out.pre_locals.insert(out.pre_locals.begin(), fresh.begin(), fresh.end());
        upre = gates_unitary(out.pre_locals, 3);
    }
    out.residual = frob_dist(l, upost * urepl * upre);
    return out.residual <= tol ? RewriteStatus::applied : RewriteStatus::numeric_failure;
}

/// Convert post locals into pre locals by conjugating the replacement
/// DC-NOTs they pass over (exact: a rotation on one wire just rotates the
/// defining vectors it meets).
inline void hoist_post_locals(RewriteOutcome& out) {
    for (const Gate& g : out.post_locals) {
        if (const auto* r = std::get_if<LocalRot>(&g)) {
            for (DcNot& d : out.replacement) {
                if (!d.touches(r->wire)) continue;
                UnitVec3& v = d.wire_i == r->wire ? d.v_i : d.v_j;
                v = UnitVec3::normalized(rotate_about(v.vec(), r->axis, -2.0 * r->theta));
            }
        }
        out.pre_locals.push_back(g);
    }
    out.post_locals.clear();
}

}  // namespace detail

/// Wake identity: push a mobile DC-NOT through a static one sharing a foiled
/// wire, producing a wake DC-NOT on the third pair. Exact matrix equality.
/// Input operator: mobile applied after static; output run is chronological.
inline RewriteResult wake_rewrite(const DcNot& mobile, const DcNot& statik) {
    int shared = -1;
    for (int w : {statik.wire_i, statik.wire_j})
        if (mobile.touches(w)) shared = w;
    if (shared < 0) throw std::invalid_argument("wake_rewrite: gates share no wire");
    const UnitVec3& bp = mobile.vec_on(shared);
    const UnitVec3& ap = statik.vec_on(shared);
    if (!perpendicular(ap.vec(), bp.vec())) return {};
    int wm = mobile.other_wire(shared);
    int wt = statik.other_wire(shared);
    DcNot wake{wm, mobile.vec_on(wm), wt, statik.vec_on(wt)};
    RewriteResult res;
    res.status = RewriteStatus::applied;
    res.outcome.replacement = {wake, mobile, statik};
    CMat lhs = dcnot_unitary(mobile, 3) * dcnot_unitary(statik, 3);
    CMat rhs = dcnot_unitary(statik, 3) * dcnot_unitary(mobile, 3) * dcnot_unitary(wake, 3);
    res.outcome.residual = frob_dist(lhs, rhs);
    if (res.outcome.residual > 1e-10) res.status = RewriteStatus::numeric_failure;
    return res;
}

namespace detail {

inline RewriteResult pass_through_canonical(const PassThroughContext& ctx);

}  // namespace detail

/// Pass-through dispatcher: moves the static DC-NOT across the mobile run,
/// preserving gate counts. The reversed direction (static first) is handled
/// by conjugating with circuit reversal.
inline RewriteResult pass_through(const PassThroughContext& ctx) {
    if (ctx.mobile_run.empty() || ctx.mobile_run.size() > 3)
        throw std::invalid_argument("pass_through: mobile run must have 1..3 gates");
    if (ctx.mobile_first) return detail::pass_through_canonical(ctx);
    PassThroughContext rev = ctx;
    rev.mobile_first = true;
    std::reverse(rev.mobile_run.begin(), rev.mobile_run.end());
    RewriteResult r = detail::pass_through_canonical(rev);
    if (!r.ok()) return r;
    r.outcome = detail::reverse_outcome(r.outcome);
    return r;
}

inline RewriteResult pass_through_1(const PassThroughContext& ctx) {
    if (ctx.mobile_run.size() != 1) throw std::invalid_argument("pass_through_1: need 1 mobile gate");
    return pass_through(ctx);
}
inline RewriteResult pass_through_2(const PassThroughContext& ctx) {
    if (ctx.mobile_run.size() != 2) throw std::invalid_argument("pass_through_2: need 2 mobile gates");
    return pass_through(ctx);
}
inline RewriteResult pass_through_3(const PassThroughContext& ctx) {
    if (ctx.mobile_run.size() != 3) throw std::invalid_argument("pass_through_3: need 3 mobile gates");
    return pass_through(ctx);
}

namespace detail {

inline RewriteResult pt1_impl(const PassThroughContext& ctx, const CMat& l) {
    const DcNot& mob = ctx.mobile_run[0];
    const DcNot& st = ctx.static_gate;
    int s = ctx.shared_wire();
    const UnitVec3& a = mob.vec_on(s);
    const UnitVec3& b = st.vec_on(s);
    if (!parallel(a.vec(), b.vec())) return {};
    RewriteOutcome out;
    DcNot mob2 = mob;
    if (dot(a.vec(), b.vec()) < 0) {
        // flip the shared-side vector; compensating Paulion on the other wire
        int wm = mob.other_wire(s);
        UnitVec3& v = mob2.wire_i == s ? mob2.v_i : mob2.v_j;
        v = UnitVec3::normalized(-v.vec());
        for (Gate& g : paulion_gates(wm, mob.vec_on(wm))) out.pre_locals.push_back(g);
    }
    out.replacement = {st, mob2};  // exchanged order
    return {certify3(l, out, 1e-8), std::move(out)};
}

/// Closed-form t' candidates for the existence condition of the second
/// pass-through identity, one family per 3->1 class.
inline std::vector<UnitVec3> pt2_candidates(const UnitVec3& a, const UnitVec3& ap,
                                            const UnitVec3& b, const UnitVec3& bp,
                                            const UnitVec3& e) {
    std::vector<UnitVec3> cands;
    cands.push_back(bp);  // T1b / T2a / T3a style and the degenerate equal-mobile case
    Vec3 apxbp = cross(ap.vec(), bp.vec());
    if (norm(apxbp) > kGeomTol) {
        UnitVec3 n = UnitVec3::normalized(apxbp);
        cands.push_back(complete_rhon(n).f2);  // T2b style: perpendicular to a' x b'
        cands.push_back(n);                    // T3b style: perpendicular to span(a', b')
        // T4 style: t' on the circle perpendicular to [a'b'b'], at phi' from
        // the unprimed phi of e in the (a, b) frame
        Vec3 ab = cross(a.vec(), b.vec());
        if (norm(ab) > kGeomTol) {
            KFrame k = k_frame(a, b, e);
            double phi = std::atan2(dot(e.vec(), k.k1.vec()), dot(e.vec(), k.k3.vec()));
            KFrame kp = k_frame(ap, bp, bp);
            for (double php : {phi, -phi, M_PI - phi, M_PI + phi}) {
                Vec3 cand = std::sin(php) * kp.k1.vec() + std::cos(php) * kp.k3.vec();
                cands.push_back(UnitVec3::normalized(cand));
            }
        }
    }
    return cands;
}

inline RewriteResult pt2_impl(const PassThroughContext& ctx, const CMat& l) {
    const DcNot& ga = ctx.mobile_run[0];
    const DcNot& gb = ctx.mobile_run[1];
    const DcNot& st = ctx.static_gate;
    int s = ctx.shared_wire();
    int wm = ga.other_wire(s);
    const UnitVec3& e = st.vec_on(s);
    for (const UnitVec3& tp :
         pt2_candidates(ga.vec_on(s), ga.vec_on(wm), gb.vec_on(s), gb.vec_on(wm), e)) {
        std::array<DcNot, 3> run3{ga, gb, DcNot{s, e, wm, tp}};
        RewriteResult r31 = reduce_3to1(run3);
        if (!r31.ok() || r31.outcome.residual > 1e-7) continue;
        RewriteOutcome inner = r31.outcome;
        hoist_post_locals(inner);
        RewriteOutcome out;
        out.pre_locals = inner.pre_locals;
        out.replacement = inner.replacement;  // the single a_f gate on (s, wm)
        out.replacement.push_back(st);
        out.replacement.push_back(DcNot{s, e, wm, tp});
        RewriteStatus status = certify3(l, out, 1e-7);
        if (status == RewriteStatus::applied) return {status, std::move(out)};
    }
    return {};
}

inline RewriteResult pt3_impl(const PassThroughContext& ctx, const CMat& l) {
    const DcNot& ga = ctx.mobile_run[0];
    const DcNot& gb = ctx.mobile_run[1];
    const DcNot& gc = ctx.mobile_run[2];
    const DcNot& st = ctx.static_gate;
    int s = ctx.shared_wire();
    int wm = ga.other_wire(s);
    const UnitVec3 d = st.vec_on(s);

    std::vector<VecPair> inner = {{ga.vec_on(s), ga.vec_on(wm)},
                                  {gb.vec_on(s), gb.vec_on(wm)},
                                  {gc.vec_on(s), gc.vec_on(wm)}};
    G3Parts g3 = g3_closed_parts(inner[0], inner[1], inner[2]);
    Vec3 w = matvec(g3.Li, d.vec());
    UnitVec3 dp = norm(w) > kGeomTol ? complete_rhon(UnitVec3::normalized(w)).f2 : kUz;

    std::vector<VecPair> wedge = inner;
    wedge.emplace_back(d, dp);
    CMat g4 = g2_closed(4, wedge);
    InvariantParts parts = split_parts(g4);
    double lam2r = -parts.lam_r;
    RMat3 l2i_req = -1.0 * gamma_rep(parts.Lam_i);
    RMat3 l2r_req = -1.0 * gamma_rep(parts.Lam_r);

    // Rank-one factor of the required Lam_2r. With Xo != 0 this reproduces the
    // (d + x/Xo)(d' + x'/Xo) construction; at Xo = 0 it evaluates the limits
    // the analytic branch only names.
    UnitVec3 f2, f2p;
    double ssaa;
    if (frob(l2r_req) > 1e-9) {
        SimSvd<3> sv = svd(l2r_req);
        ssaa = sv.da[0];
        f2p = -UnitVec3::normalized(col(sv.u, 0));
        f2 = UnitVec3::normalized(col(sv.v, 0));
    } else {
        ssaa = 0.0;
        f2 = null_direction(l2i_req, false);
        f2p = null_direction(l2i_req, true);
    }
    PrincipalParams2 p = g2_tail(lam2r, ssaa, f2, f2p, l2i_req);
    UnitVec3 af = principal_a(p.alpha, p.F);
    UnitVec3 apf = principal_a(p.alpha_prime, p.F_prime);
    RewriteOutcome out;
    out.replacement = {DcNot{s, af, wm, apf}, DcNot{s, p.F.f1, wm, p.F_prime.f1}, st,
                       DcNot{s, d, wm, dp}};
    return {certify3(l, out, 1e-6), std::move(out)};
}

inline RewriteResult pass_through_canonical(const PassThroughContext& ctx) {
    CMat l = context_unitary(ctx);
    switch (ctx.mobile_run.size()) {
        case 1:
            return pt1_impl(ctx, l);
        case 2:
            return pt2_impl(ctx, l);
        default:
            return pt3_impl(ctx, l);
    }
}

}  // namespace detail

}  // namespace qckt
