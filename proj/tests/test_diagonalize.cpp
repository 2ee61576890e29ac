#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "qckt/invariants.hpp"

using namespace qckt;
using testutil::Rng;

TEST_CASE("diagonalize_g2 identity and known instance") {
    DiagG2Result r = diagonalize_g2(CMat::identity(4));
    CHECK(std::abs(r.params.alpha) < 1e-9);
    CHECK(std::abs(r.params.alpha_prime) < 1e-9);
    CHECK(testutil::approx(r.a.vec(), r.b.vec(), 1e-9));
    CHECK(testutil::approx(r.a_prime.vec(), r.b_prime.vec(), 1e-9));

    // (a,a',b,b') = (y,z,x,z): angles {pi/2, 0} recovered up to the
    // algorithm's conventions (the SVD ordering may place them on either
    // wire; angle swapping preserves the invariant)
    CMat m = g2_closed(2, {VecPair{kUy, kUz}, VecPair{kUx, kUz}});
    DiagG2Result r2 = diagonalize_g2(m);
    CHECK(r2.residual < 1e-8);
    double s0 = std::abs(std::sin(r2.params.alpha));
    double s1 = std::abs(std::sin(r2.params.alpha_prime));
    CHECK(std::abs(std::max(s0, s1) - 1.0) < 1e-9);
    CHECK(std::min(s0, s1) < 1e-9);
}

TEST_CASE("diagonalize_g2 random round trips") {
    Rng rng(61);
    double worst = 0;
    for (int t = 0; t < 1000; ++t) {
        CMat m = g2_closed(2, {VecPair{rng.unit_vec(), rng.unit_vec()},
                               VecPair{rng.unit_vec(), rng.unit_vec()}});
        DiagG2Result r = diagonalize_g2(m);
        worst = std::max(worst, r.residual);
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("diagonalize_g2 degenerate families") {
    Rng rng(62);
    for (int t = 0; t < 100; ++t) {
        UnitVec3 a = rng.unit_vec();
        UnitVec3 ap = rng.unit_vec(), bp = rng.unit_vec();
        // breach on wire 0 (b || a): Lam_2r = 0
        CMat m = g2_closed(2, {VecPair{a, ap}, VecPair{a, bp}});
        DiagG2Result r = diagonalize_g2(m);
        CHECK(r.residual < 1e-8);
        // scalar invariant (both pairs parallel)
        CMat ms = g2_closed(2, {VecPair{a, ap}, VecPair{a, ap}});
        DiagG2Result rs = diagonalize_g2(ms);
        CHECK(rs.residual < 1e-8);
    }
    // non-G2 input is rejected
    CMat bad = dcnot_unitary(DcNot{0, kUx, 1, kUz}, 2);  // a unitary, not an invariant shape
    CHECK_THROWS(diagonalize_g2(quad_invariant(bad, 2) * quad_invariant(bad, 2) *
                                kron(rot2(kUx, 0.3), rot2(kUy, 0.7))));
}

TEST_CASE("diagonalize_g3 degenerate single-DC-NOT instance") {
    // one DC-NOT as a degenerate triple
    VecPair p{kUx, kUx};
    CMat m = g2_closed(3, {p, p, p});
    DiagG3Result r = diagonalize_g3(m);
    CHECK(r.residual < 1e-7);
}

TEST_CASE("diagonalize_g3 random round trips and canonical orientation") {
    Rng rng(63);
    double worst = 0;
    for (int t = 0; t < 500; ++t) {
        CMat m = g2_closed(3, {VecPair{rng.unit_vec(), rng.unit_vec()},
                               VecPair{rng.unit_vec(), rng.unit_vec()},
                               VecPair{rng.unit_vec(), rng.unit_vec()}});
        DiagG3Result r = diagonalize_g3(m);
        worst = std::max(worst, r.residual);
        // canonical orientation: a,b,c coplanar; b' perp span(c', a')
        CHECK(std::abs(triple(r.a.vec(), r.b.vec(), r.c.vec())) < 1e-8);
        CHECK(std::abs(dot(r.b_prime.vec(), r.c_prime.vec())) < 1e-8);
        CHECK(std::abs(dot(r.b_prime.vec(), r.a_prime.vec())) < 1e-8);
        // principal parameters reproduce their closed forms
        const PrincipalParams3& pp = r.params;
        double cb = std::cos(pp.beta), sb = std::sin(pp.beta);
        double c1 = std::cos(pp.beta1), s1 = std::sin(pp.beta1);
        double c2 = std::cos(pp.beta2), s2 = std::sin(pp.beta2);
        CHECK(std::abs(pp.Xo - cb * pp.xi * s1 * s2) < 1e-10);
        CHECK(std::abs(pp.Yo - sb * c1 * c2) < 1e-10);
        CHECK(std::abs(pp.nu[0] - sb * c1 * s2) < 1e-10);
        CHECK(std::abs(pp.nu[1] - sb * s1 * std::abs(c2)) < 1e-10);
        CHECK(std::abs(pp.nu[2] - cb * c1 * c2) < 1e-10);
        CHECK(std::abs(pp.mu[0] + cb * s1 * std::abs(c2)) < 1e-10);
        CHECK(std::abs(pp.mu[1] + cb * c1 * s2) < 1e-10);
        CHECK(std::abs(pp.mu[2] - sb * pp.xi * s1 * s2) < 1e-10);
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(pp.mu[j] * pp.nu[j] - pp.Xo * pp.Yo) < 1e-9);
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("diagonalize_g3 beta extraction consistency") {
    Rng rng(64);
    for (int t = 0; t < 100; ++t) {
        CMat m = g2_closed(3, {VecPair{rng.unit_vec(), rng.unit_vec()},
                               VecPair{rng.unit_vec(), rng.unit_vec()},
                               VecPair{rng.unit_vec(), rng.unit_vec()}});
        DiagG3Result r = diagonalize_g3(m);
        const PrincipalParams3& pp = r.params;
        double den = std::hypot(pp.mu[2], pp.Xo);
        if (den > 1e-6) {
            CHECK(std::cos(pp.beta) == doctest::Approx(pp.xi * pp.Xo / den).epsilon(1e-7));
            CHECK(std::sin(pp.beta) == doctest::Approx(pp.xi * pp.mu[2] / den).epsilon(1e-7));
        }
    }
}

TEST_CASE("diagonalize_g3 breach families") {
    Rng rng(65);
    for (int t = 0; t < 100; ++t) {
        UnitVec3 a = rng.unit_vec(), ap = rng.unit_vec(), cp = rng.unit_vec(), c = rng.unit_vec();
        // b equal to a (breach between a and b on wire 0)
        CMat m = g2_closed(3, {VecPair{a, ap}, VecPair{a, cp}, VecPair{c, cp}});
        DiagG3Result r = diagonalize_g3(m);
        CHECK(r.residual < 1e-7);
    }
}
