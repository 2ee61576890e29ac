#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qckt/circuit.hpp"
#include "qckt/cmat.hpp"
#include "qckt/rmat.hpp"
#include "qckt/su2.hpp"
#include "qckt/vec3.hpp"

namespace qckt {

/// A sigma_y^{(x)n} A^T sigma_y^{(x)n}: constant up to phase on LO-RHS classes.
inline CMat quad_invariant(const CMat& a, int nbits) {
    if (a.dim() != (1 << nbits))
        throw std::invalid_argument("quad_invariant: matrix dimension does not match nbits");
    require_unitary(a, "quad_invariant");
    CMat syn = CMat::identity(1);
    for (int k = 0; k < nbits; ++k) syn = kron(syn, sigma_y());
    return a * syn * a.transposed() * syn;
}

/// One defining-vector pair of a DC-NOT: (bit-0 vector, bit-1 vector).
using VecPair = std::pair<UnitVec3, UnitVec3>;

/// Decomposition of an invariant into scalar and traceless Hermitian parts:
/// M = lam_r + i lam_i + Lam_r + i Lam_i.
struct InvariantParts {
    double lam_r = 0.0, lam_i = 0.0;
    CMat Lam_r, Lam_i;

    CMat reassemble() const {
        return cplx{lam_r, lam_i} * CMat::identity(4) + Lam_r + kI * Lam_i;
    }
};

inline InvariantParts split_parts(const CMat& m) {
    if (m.dim() != 4) throw std::invalid_argument("split_parts: need a 4x4 matrix");
    InvariantParts p;
    cplx t = 0.25 * m.trace();
    p.lam_r = t.real();
    p.lam_i = t.imag();
    CMat delta = m - t * CMat::identity(4);
    CMat dad = delta.adjoint();
    p.Lam_r = 0.5 * (delta + dad);
    p.Lam_i = cplx{0.0, -0.5} * (delta - dad);
    return p;
}

namespace detail {

/// Gamma-representation parts of the r = 3 closed form evaluated on raw vectors.
struct G3Parts {
    double lam_r = 0.0, lam_i = 0.0;
    RMat3 Lr, Li;
};

inline G3Parts g3_closed_parts(const VecPair& pa, const VecPair& pb, const VecPair& pc) {
    const Vec3 a = pa.first, ap = pa.second;
    const Vec3 b = pb.first, bp = pb.second;
    const Vec3 c = pc.first, cp = pc.second;
    const double ab = dot(a, b), bc = dot(b, c);
    const double apbp = dot(ap, bp), bpcp = dot(bp, cp);
    const double vol = triple(a, b, c), volp = triple(ap, bp, cp);
    const Vec3 xab = cross(a, b), xapbp = cross(ap, bp);
    const Vec3 xbc = cross(b, c), xbpcp = cross(bp, cp);
    const double abb_c = dot(cross(xab, b), c);      // [a b b].c
    const double apbpbp_cp = dot(cross(xapbp, bp), cp);

    G3Parts g;
    g.lam_r = apbpbp_cp * abb_c;
    g.lam_i = -ab * bc * volp - apbp * bpcp * vol;
    g.Lr = (-apbp * ab) * outer(cp, c) + (ab * bc) * outer(cross(xapbp, cp), c) +
           (apbp * bpcp) * outer(cp, cross(xab, c)) + (apbp * vol) * outer(xbpcp, c) +
           (ab * volp) * outer(cp, xbc) -
           outer(cross(cross(cross(xapbp, bp), cp), cp), cross(cross(cross(xab, b), c), c));
    g.Li = ab * outer(cross(cross(xapbp, cp), cp), cross(xbc, c)) +
           apbp * outer(cross(xbpcp, cp), cross(cross(xab, c), c)) +
           abb_c * outer(cross(cross(xapbp, bp), cp), c) +
           apbpbp_cp * outer(cp, cross(cross(xab, b), c));
    return g;
}

/// r = 4 parts from the r = 3 parts of the inner triple and the outer pair (d, d').
struct G4Parts {
    double lam_r = 0.0, lam_i = 0.0;
    RMat3 Lr, Li;
};

inline RMat3 g4_delta_block(const RMat3& l3, Vec3 d, Vec3 dp) {
    return dot(dp, matvec(l3, d)) * outer(dp, d) - outer(matvec(l3, d), d) -
           outer(dp, matvec(l3.transposed(), dp)) + l3;
}

inline G4Parts g4_parts_from_g3(const G3Parts& g3, Vec3 d, Vec3 dp) {
    G4Parts g;
    const double xo = -g3.lam_r, yo = -g3.lam_i;
    g.lam_r = -dot(dp, matvec(g3.Lr, d));
    g.lam_i = -dot(dp, matvec(g3.Li, d));
    const Vec3 x = cross(matvec(g3.Li.transposed(), dp), d);
    const Vec3 y = cross(matvec(g3.Lr.transposed(), dp), d);
    const Vec3 xp = cross(matvec(g3.Li, d), dp);
    const Vec3 yp = cross(matvec(g3.Lr, d), dp);
    g.Lr = xo * outer(dp, d) + outer(xp, d) + outer(dp, x) + g4_delta_block(g3.Lr, d, dp);
    g.Li = yo * outer(dp, d) - outer(yp, d) - outer(dp, y) + g4_delta_block(g3.Li, d, dp);
    return g;
}

inline CMat assemble_parts(double lam_r, double lam_i, const RMat3& lr, const RMat3& li) {
    return cplx{lam_r, lam_i} * CMat::identity(4) + gamma_inv(lr) + kI * gamma_inv(li);
}

}  // namespace detail

/// Closed form of the LO-RHS invariant of a product of r DC-NOTs on two
/// qubits. Pairs are ordered rightmost-first: pairs[0] is the first gate
/// applied. Each pair is (bit-0 vector, bit-1 vector).
inline CMat g2_closed(int r, std::span<const VecPair> pairs) {
    if (r < 1 || r > 4) throw std::invalid_argument("g2_closed: r must be in 1..4");
    if (static_cast<int>(pairs.size()) != r)
        throw std::invalid_argument("g2_closed: pair count does not match r");
    switch (r) {
        case 1: {
            const Vec3 a = pairs[0].first, ap = pairs[0].second;
            return cplx{-1.0, 0.0} * kron(paulion(ap), paulion(a));
        }
        case 2: {
            const Vec3 a = pairs[0].first, ap = pairs[0].second;
            const Vec3 b = pairs[1].first, bp = pairs[1].second;
            const double ab = dot(a, b), apbp = dot(ap, bp);
            RMat3 lr = -1.0 * outer(cross(cross(ap, bp), bp), cross(cross(a, b), b));
            RMat3 li = ab * outer(cross(ap, bp), b) + apbp * outer(bp, cross(a, b));
            return detail::assemble_parts(ab * apbp, 0.0, lr, li);
        }
        case 3: {
            detail::G3Parts g = detail::g3_closed_parts(pairs[0], pairs[1], pairs[2]);
            return detail::assemble_parts(g.lam_r, g.lam_i, g.Lr, g.Li);
        }
        default: {
            detail::G3Parts g3 = detail::g3_closed_parts(pairs[0], pairs[1], pairs[2]);
            detail::G4Parts g4 =
                detail::g4_parts_from_g3(g3, pairs[3].first.vec(), pairs[3].second.vec());
            return detail::assemble_parts(g4.lam_r, g4.lam_i, g4.Lr, g4.Li);
        }
    }
}

inline CMat g2_closed(int r, std::initializer_list<VecPair> pairs) {
    return g2_closed(r, std::span<const VecPair>(pairs.begin(), pairs.size()));
}

/// The special counterpart of an r-DC-NOT product: i^{r/2} G_r, which has unit
/// determinant and satisfies (i^{r/2} G_r)^(2) = i^r G_r^(2).
inline CMat special_counterpart_of_run(const CMat& g, int r) {
    return std::polar(1.0, M_PI_4 * r) * g;
}

/// LO-RHS equivalence test for 4x4 unitaries: true iff the quadratic
/// invariants agree up to a phase. Also returns the aligning phase zeta.
inline std::pair<bool, double> lo_rhs_equivalent(const CMat& a, const CMat& b) {
    if (a.dim() != 4 || b.dim() != 4)
        throw std::invalid_argument("lo_rhs_equivalent: decision valid for 4x4 matrices only");
    CMat a2 = quad_invariant(a, 2);
    CMat b2 = quad_invariant(b, 2);
    const double tol = 1e-7 * 4.0;
    cplx t = (b2.adjoint() * a2).trace();
    if (std::abs(t) >= 1e-10) {
        double zeta = std::arg(t);
        bool eq = frob_dist(a2, std::polar(1.0, zeta) * b2) <= tol;
        return {eq, zeta};
    }
    // Traceless overlap: compare entrywise magnitudes, then scan the discrete
    // phases {1, i, -1, -i}.
    double magdiff = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double d = std::abs(a2(i, j)) - std::abs(b2(i, j));
            magdiff += d * d;
        }
    if (std::sqrt(magdiff) > tol) return {false, 0.0};
    double best_zeta = 0.0, best = 1e300;
    for (int k = 0; k < 4; ++k) {
        double zeta = M_PI_2 * k;
        double d = frob_dist(a2, std::polar(1.0, zeta) * b2);
        if (d < best) {
            best = d;
            best_zeta = zeta;
        }
    }
    return {best <= tol, best_zeta};
}

/// Result of factoring a unitary into phase * (U_{n-1} (x) ... (x) U_0).
/// factors[w] acts on wire w (wire 0 least significant); each has determinant 1.
struct FactorResult {
    bool ok = false;
    double residual = 0.0;      // Frobenius norm of M - reconstruction
    double rel_residual = 0.0;
    GlobalPhase phase{0.0};
    std::vector<CMat> factors;
};

namespace detail {

inline CMat dominant_peel(const CMat& m, CMat& rest) {
    const int h = m.dim() / 2;
    // R rows: vec of the 2x2 block grid; R is 4 x h^2.
    std::vector<std::array<cplx, 4>> rt(static_cast<std::size_t>(h) * h);
    for (int bi = 0; bi < 2; ++bi)
        for (int bj = 0; bj < 2; ++bj)
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < h; ++c)
                    rt[static_cast<std::size_t>(r) * h + c][bi * 2 + bj] = m(bi * h + r, bj * h + c);
    CMat gram(4);
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) {
            cplx s = 0;
            for (const auto& rowv : rt) s += rowv[p] * std::conj(rowv[q]);
            gram(p, q) = s;
        }
    HermEig eig = herm_eig(gram);
    std::array<cplx, 4> u{};
    for (int p = 0; p < 4; ++p) u[p] = eig.vectors(p, 0);
    CMat a(2);
    a(0, 0) = u[0];
    a(0, 1) = u[1];
    a(1, 0) = u[2];
    a(1, 1) = u[3];
    rest = CMat(h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < h; ++c) {
            cplx s = 0;
            for (int p = 0; p < 4; ++p) s += std::conj(u[p]) * rt[static_cast<std::size_t>(r) * h + c][p];
            rest(r, c) = s;
        }
    return a;
}

}  // namespace detail

/// Factor M (4x4 or 8x8 unitary) into a global phase times a tensor product of
/// determinant-1 single-qubit factors. Fails (ok = false) when the best
/// rank-one reshuffled approximation leaves relative residual > 1e-6.
inline FactorResult factor_tensor_product(const CMat& m, int n) {
    if (n < 2 || n > 3 || m.dim() != (1 << n))
        throw std::invalid_argument("factor_tensor_product: need a 4x4 (n=2) or 8x8 (n=3) matrix");
    require_unitary(m, "factor_tensor_product");
    FactorResult out;
    out.factors.resize(n, CMat::identity(2));
    CMat cur = m;
    cplx scalar = 1.0;
    for (int wire = n - 1; wire >= 1; --wire) {
        CMat rest;
        CMat a = detail::dominant_peel(cur, rest);
        cplx da = det(a);
        if (std::abs(da) < 1e-12) return out;  // no rank-one structure at all
        cplx rt = std::polar(std::sqrt(std::abs(da)), 0.5 * std::arg(da));
        out.factors[wire] = (1.0 / rt) * a;
        cur = rt * rest;
    }
    cplx db = det(cur);
    if (std::abs(db) < 1e-12) return out;
    cplx rb = std::polar(std::sqrt(std::abs(db)), 0.5 * std::arg(db));
    out.factors[0] = (1.0 / rb) * cur;
    scalar = rb;
    out.phase = GlobalPhase{std::arg(scalar)};

    CMat rec = CMat::identity(1);
    for (int w = n - 1; w >= 0; --w) rec = kron(rec, out.factors[w]);
    rec = std::polar(1.0, out.phase.theta) * rec;
    out.residual = frob_dist(m, rec);
    out.rel_residual = out.residual / frob(m);
    out.ok = out.rel_residual <= 1e-6;
    return out;
}

/// Angle-plus-basis parameterization of a 2-DC-NOT invariant.
struct PrincipalParams2 {
    double alpha = 0.0, alpha_prime = 0.0;
    RhonBasis F;
    RhonBasis F_prime;
};

/// Angle-plus-basis parameterization of a 3-DC-NOT invariant.
struct PrincipalParams3 {
    double beta = 0.0, beta1 = 0.0, beta2 = 0.0;
    int xi = 1;
    RhonBasis G;
    RhonBasis G_prime;
    std::array<double, 3> nu{}, mu{};
    double Xo = 0.0, Yo = 0.0;
};

namespace detail {

/// Shared tail of the G2 diagonalization (steps 3..7): given the scalar
/// products lam2r = c_a' c_a and ss = s_a' s_a, the rank-one directions f2,
/// f2', and the Gamma representation of Lam_2i, recover angles and bases.
inline PrincipalParams2 g2_tail(double lam2r, double ss, const UnitVec3& f2,
                                const UnitVec3& f2p, const RMat3& l2i) {
    RhonBasis h = rhon_with_middle(f2);
    RhonBasis hp = rhon_with_middle(f2p);
    auto proj = [&](const UnitVec3& u, const UnitVec3& v) {
        return dot(u.vec(), matvec(l2i, v.vec()));
    };
    RMat2 m2;
    m2(0, 0) = proj(hp.f3, h.f1);
    m2(0, 1) = proj(hp.f3, h.f3);
    m2(1, 0) = proj(hp.f1, h.f1);
    m2(1, 1) = proj(hp.f1, h.f3);
    SimSvd<2> sv = svd(m2);
    double p_sc = sv.da[0], p_cs = sv.da[1];
    auto combo = [](const UnitVec3& u, const UnitVec3& v, double cu, double cv) {
        return UnitVec3::normalized(cu * u.vec() + cv * v.vec());
    };
    UnitVec3 f3p = combo(hp.f3, hp.f1, sv.u(0, 0), sv.u(1, 0));
    UnitVec3 f1p = combo(hp.f3, hp.f1, sv.u(0, 1), sv.u(1, 1));
    UnitVec3 f1 = combo(h.f1, h.f3, sv.v(0, 0), sv.v(1, 0));
    UnitVec3 f3 = combo(h.f1, h.f3, sv.v(0, 1), sv.v(1, 1));
    double det_u = sv.u(0, 0) * sv.u(1, 1) - sv.u(0, 1) * sv.u(1, 0);
    double det_v = sv.v(0, 0) * sv.v(1, 1) - sv.v(0, 1) * sv.v(1, 0);
    if (det_u < 0) {
        f3p = -f3p;
        p_sc = -p_sc;
    }
    if (det_v < 0) {
        f3 = -f3;
        p_cs = -p_cs;
    }
    double sum = std::atan2(p_sc + p_cs, lam2r - ss);
    double diff = std::atan2(p_sc - p_cs, lam2r + ss);
    PrincipalParams2 out{0.5 * (sum + diff), 0.0, RhonBasis(f1, f2, f3), RhonBasis(f1p, f2p, f3p)};
    out.alpha_prime = 0.5 * (sum + diff);
    out.alpha = 0.5 * (sum - diff);
    return out;
}

/// Defining vectors implied by principal parameters: b = f1, a = c f1 - s f2.
inline UnitVec3 principal_a(double alpha, const RhonBasis& f) {
    return UnitVec3::normalized(std::cos(alpha) * f.f1.vec() - std::sin(alpha) * f.f2.vec());
}

/// Deterministic unit vector orthogonal to the row space (transpose = false)
/// or column space (transpose = true) of a 3x3 matrix; z for the zero matrix.
inline UnitVec3 null_direction(const RMat3& l, bool column_side) {
    if (frob(l) < 1e-12) return kUz;
    SimSvd<3> sv = svd(l);
    Vec3 v = column_side ? col(sv.u, 2) : col(sv.v, 2);
    int big = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(v[k]) > std::abs(v[big])) big = k;
    if (v[big] < 0) v = -v;
    return UnitVec3::normalized(v);
}

}  // namespace detail

/// Recovered parameters and defining vectors of a G2-shaped invariant.
struct DiagG2Result {
    PrincipalParams2 params;
    UnitVec3 a, b, a_prime, b_prime;
    double residual = 0.0;
};

/// Algorithm for diagonalizing a 2-DC-NOT invariant. Throws when the input is
/// not such an invariant (reconstruction residual above 1e-6).
inline DiagG2Result diagonalize_g2(const CMat& m) {
    InvariantParts parts = split_parts(m);
    RMat3 l2r = gamma_rep(parts.Lam_r);
    RMat3 l2i = gamma_rep(parts.Lam_i);
    double ss = 0.0;
    UnitVec3 f2, f2p;
    if (frob(l2r) > 1e-9) {
        SimSvd<3> sv = svd(l2r);
        ss = sv.da[0];
        f2p = -UnitVec3::normalized(col(sv.u, 0));
        f2 = UnitVec3::normalized(col(sv.v, 0));
    } else {
        // Degenerate branch: pick directions orthogonal to Lam_2i's row and
        // column spaces so the 2x2 projection keeps all of its mass.
        f2 = detail::null_direction(l2i, false);
        f2p = detail::null_direction(l2i, true);
    }
    PrincipalParams2 p = detail::g2_tail(parts.lam_r, ss, f2, f2p, l2i);
    DiagG2Result out{p, detail::principal_a(p.alpha, p.F), p.F.f1,
                     detail::principal_a(p.alpha_prime, p.F_prime), p.F_prime.f1, 0.0};
    CMat rec = g2_closed(2, {VecPair{out.a, out.a_prime}, VecPair{out.b, out.b_prime}});
    out.residual = frob_dist(rec, m);
    if (out.residual > 1e-6)
        throw std::runtime_error("diagonalize_g2: input is not a 2-DC-NOT invariant (residual " +
                                 std::to_string(out.residual) + ")");
    return out;
}

/// Recovered parameters and defining vectors of a G3-shaped invariant.
struct DiagG3Result {
    PrincipalParams3 params;
    UnitVec3 a, b, c, a_prime, b_prime, c_prime;
    double residual = 0.0;
};

namespace detail {

struct G3Candidate {
    std::array<double, 3> nu{}, mu{};
    RMat3 vg, ug;  // columns g_j, g'_j
};

inline std::optional<DiagG3Result> g3_try_candidate(const CMat& m, double xo, double yo,
                                                    G3Candidate cand, int xi, double beta,
                                                    double accept_tol) {
    const int xi2 = -xi;
    double cb = std::cos(beta), sb = std::sin(beta);
    double p00, p01, p10, p11;  // [[c1c2, c1s2],[s1c2, s1s2]]
    if (std::abs(cb) >= std::abs(sb)) {
        if (std::abs(cb) < 1e-12) return std::nullopt;
        p00 = cand.nu[2] / cb;
        p01 = -cand.mu[1] / cb;
        p10 = -xi2 * cand.mu[0] / cb;
        p11 = xi * xo / cb;
    } else {
        p00 = yo / sb;
        p01 = cand.nu[0] / sb;
        p10 = xi2 * cand.nu[1] / sb;
        p11 = xi * cand.mu[2] / sb;
    }
    double sum = std::atan2(p10 + p01, p00 - p11);
    double diff = std::atan2(p10 - p01, p00 + p11);
    double b1 = 0.5 * (sum + diff), b2 = 0.5 * (sum - diff);

    RMat3 ug = cand.ug;
    std::array<double, 3> nu = cand.nu, mu = cand.mu;
    auto negate_primed_12 = [&]() {
        for (int r = 0; r < 3; ++r) {
            ug(r, 0) = -ug(r, 0);
            ug(r, 1) = -ug(r, 1);
        }
        nu[0] = -nu[0];
        nu[1] = -nu[1];
        mu[0] = -mu[0];
        mu[1] = -mu[1];
    };
    if (std::sin(b1) < 0) {
        b1 = -b1;
        b2 = -b2;
        negate_primed_12();
    }
    if (xi2 * std::cos(b2) < 0) {
        b1 = M_PI - b1;
        b2 = M_PI - b2;
        negate_primed_12();
    }

    // The recovered parameters must reproduce the canonical closed forms.
    double cb1 = std::cos(b1), sb1 = std::sin(b1), cb2 = std::cos(b2), sb2 = std::sin(b2);
    double xo_f = cb * xi * sb1 * sb2;
    double yo_f = sb * cb1 * cb2;
    std::array<double, 3> nu_f = {sb * cb1 * sb2, sb * sb1 * std::abs(cb2), cb * cb1 * cb2};
    std::array<double, 3> mu_f = {-cb * sb1 * std::abs(cb2), -cb * cb1 * sb2, sb * xi * sb1 * sb2};
    const double fit_tol = 1e-7;
    if (std::abs(xo_f - xo) > fit_tol || std::abs(yo_f - yo) > fit_tol) return std::nullopt;
    for (int k = 0; k < 3; ++k)
        if (std::abs(nu_f[k] - nu[k]) > fit_tol || std::abs(mu_f[k] - mu[k]) > fit_tol)
            return std::nullopt;

    std::optional<DiagG3Result> out;
    try {
        auto gv = [&](const RMat3& base, int j) { return UnitVec3::normalized(col(base, j)); };
        out.emplace(DiagG3Result{
            PrincipalParams3{beta, b1, b2, xi,
                             RhonBasis(gv(cand.vg, 0), gv(cand.vg, 1), gv(cand.vg, 2)),
                             RhonBasis(gv(ug, 0), gv(ug, 1), gv(ug, 2)), nu_f, mu_f, xo_f, yo_f},
            UnitVec3(), UnitVec3(), UnitVec3(), UnitVec3(), UnitVec3(), UnitVec3(), 0.0});
    } catch (const std::invalid_argument&) {
        return std::nullopt;  // basis construction rejects the candidate
    }
    const RhonBasis& g = out->params.G;
    const RhonBasis& gp = out->params.G_prime;
    out->c = g.f1;
    out->b = UnitVec3::normalized(cb2 * g.f1.vec() + sb2 * g.f3.vec());
    double phi_a = b2 - xi2 * b1;
    out->a = UnitVec3::normalized(std::cos(phi_a) * g.f1.vec() + std::sin(phi_a) * g.f3.vec());
    out->c_prime = gp.f1;
    out->b_prime = gp.f3;
    out->a_prime = UnitVec3::normalized(cb * gp.f1.vec() + sb * gp.f2.vec());

    CMat rec = g2_closed(3, {VecPair{out->a, out->a_prime}, VecPair{out->b, out->b_prime},
                             VecPair{out->c, out->c_prime}});
    out->residual = frob_dist(rec, m);
    if (out->residual > accept_tol) return std::nullopt;
    return out;
}

}  // namespace detail

/// Algorithm for diagonalizing a 3-DC-NOT invariant. The simultaneous SVD
/// leaves column order, per-column signs and the beta branch undetermined;
/// the finitely many consistent assignments are tried in a fixed order and
/// accepted via the reconstruction residual. Candidates within accept_tol win
/// immediately; otherwise the best structurally consistent candidate is kept
/// and accepted up to reject_tol.
inline DiagG3Result diagonalize_g3(const CMat& m, double accept_tol = 1e-7,
                                   double reject_tol = 1e-5) {
    InvariantParts parts = split_parts(m);
    RMat3 l3r = gamma_rep(parts.Lam_r);
    RMat3 l3i = gamma_rep(parts.Lam_i);
    const double xo = -parts.lam_r, yo = -parts.lam_i;

    SimSvd<3> sv;
    try {
        sv = simultaneous_svd(l3r, l3i);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("diagonalize_g3: ") + e.what());
    }

    static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    static constexpr int kPi[3] = {1, 2, 0};  // pi: 1->2, 2->3, 3->1 (0-based)

    std::optional<DiagG3Result> best;
    for (const auto& perm : kPerms) {
        for (int emask = 0; emask < 8; ++emask) {
            for (int epmask = 0; epmask < 8; ++epmask) {
                detail::G3Candidate cand;
                // SVD term k maps to slot j = perm[k]:
                //   g'_{j} = ep_k u_k,  g_{pi(j)} = e_k v_k,  nu_j = ep_k e_k da_k.
                for (int k = 0; k < 3; ++k) {
                    int j = perm[k];
                    double e = (emask >> k) & 1 ? -1.0 : 1.0;
                    double ep = (epmask >> k) & 1 ? -1.0 : 1.0;
                    Vec3 u = col(sv.u, k), v = col(sv.v, k);
                    set_col(cand.ug, j, ep * u);
                    set_col(cand.vg, kPi[j], e * v);
                    cand.nu[j] = ep * e * sv.da[k];
                    cand.mu[j] = ep * e * sv.db[k];
                }
                if (det(cand.vg) < 0.5 || det(cand.ug) < 0.5) continue;  // need right-handed bases

                std::vector<std::pair<int, double>> branches;  // (xi, beta)
                double prod = cand.mu[2] * cand.nu[1];
                std::vector<int> xis;
                if (std::abs(prod) > 1e-12)
                    xis.push_back(prod > 0 ? 1 : -1);
                else {
                    xis.push_back(1);
                    xis.push_back(-1);
                }
                for (int xi : xis) {
                    double den = std::hypot(cand.mu[2], xo);
                    if (den > 1e-9) {
                        branches.emplace_back(xi, std::atan2(xi * cand.mu[2] / den, xi * xo / den));
                    } else {
                        double den2 = std::hypot(cand.nu[2], yo);
                        if (den2 > 1e-9) {
                            double base = std::atan2(yo, cand.nu[2]);
                            branches.emplace_back(xi, base);
                            branches.emplace_back(xi, base + M_PI);
                        } else {
                            double den3 = std::hypot(cand.nu[1], cand.mu[0]);
                            double base = den3 > 1e-9 ? std::atan2(cand.nu[1], -cand.mu[0]) : 0.0;
                            branches.emplace_back(xi, base);
                            branches.emplace_back(xi, base + M_PI);
                        }
                    }
                }
                for (auto [xi, beta] : branches) {
                    auto got = detail::g3_try_candidate(m, xo, yo, cand, xi, beta, reject_tol);
                    if (!got) continue;
                    if (got->residual <= accept_tol) return *got;
                    if (!best || got->residual < best->residual) best = got;
                }
            }
        }
    }
    if (best && best->residual <= reject_tol) return *best;
    throw std::runtime_error("diagonalize_g3: input is not a 3-DC-NOT invariant at tolerance");
}

/// Blocks of the 4-DC-NOT invariant expressed in the principal frame of the
/// inner triple. Vectors and matrices live in the rotated coordinates where
/// the g bases become the standard basis.
struct Invariant4Blocks {
    Vec3 x, y, x_prime, y_prime;
    RMat3 DeltaX, DeltaY, Mmu, Mnu;
    double lam4r = 0.0, lam4i = 0.0;
};

inline Invariant4Blocks g4_blocks(const PrincipalParams3& p, const UnitVec3& d,
                                  const UnitVec3& d_prime) {
    RMat3 pi_mat;
    pi_mat(0, 1) = pi_mat(1, 2) = pi_mat(2, 0) = 1.0;
    RMat3 mnu, mmu;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            mnu(i, j) = p.nu[i] * pi_mat(i, j);
            mmu(i, j) = p.mu[i] * pi_mat(i, j);
        }
    auto coords = [](const RhonBasis& basis, Vec3 v) {
        return Vec3{dot(basis.f1.vec(), v), dot(basis.f2.vec(), v), dot(basis.f3.vec(), v)};
    };
    Vec3 dt = coords(p.G, d.vec());
    Vec3 dpt = coords(p.G_prime, d_prime.vec());

    Invariant4Blocks b;
    b.Mmu = mmu;
    b.Mnu = mnu;
    b.x = cross(matvec(mmu.transposed(), dpt), dt);
    b.y = cross(matvec(mnu.transposed(), dpt), dt);
    b.x_prime = cross(matvec(mmu, dt), dpt);
    b.y_prime = cross(matvec(mnu, dt), dpt);
    b.DeltaX = detail::g4_delta_block(mnu, dt, dpt);
    b.DeltaY = detail::g4_delta_block(mmu, dt, dpt);
    b.lam4r = -dot(dpt, matvec(mnu, dt));
    b.lam4i = -dot(dpt, matvec(mmu, dt));
    return b;
}

/// Reassemble the full 4-DC-NOT invariant from principal-frame blocks,
/// rotating back into the lab frame.
inline CMat invariant_from_g4_blocks(const PrincipalParams3& p, const Invariant4Blocks& b,
                                     const UnitVec3& d, const UnitVec3& d_prime) {
    auto coords = [](const RhonBasis& basis, Vec3 v) {
        return Vec3{dot(basis.f1.vec(), v), dot(basis.f2.vec(), v), dot(basis.f3.vec(), v)};
    };
    Vec3 dt = coords(p.G, d.vec());
    Vec3 dpt = coords(p.G_prime, d_prime.vec());
    const double xo = p.Xo, yo = p.Yo;
    RMat3 lr_rot = xo * outer(dpt, dt) + outer(b.x_prime, dt) + outer(dpt, b.x) + b.DeltaX;
    RMat3 li_rot = yo * outer(dpt, dt) - outer(b.y_prime, dt) - outer(dpt, b.y) + b.DeltaY;
    // rotate back: L = Ug L_rot Vg^T acting between unprimed (right) and primed (left) frames
    RMat3 ug, vg;
    set_col(ug, 0, p.G_prime.f1.vec());
    set_col(ug, 1, p.G_prime.f2.vec());
    set_col(ug, 2, p.G_prime.f3.vec());
    set_col(vg, 0, p.G.f1.vec());
    set_col(vg, 1, p.G.f2.vec());
    set_col(vg, 2, p.G.f3.vec());
    RMat3 lr = ug * lr_rot * vg.transposed();
    RMat3 li = ug * li_rot * vg.transposed();
    return detail::assemble_parts(b.lam4r, b.lam4i, lr, li);
}

}  // namespace qckt
