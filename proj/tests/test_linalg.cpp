#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "qckt/rmat.hpp"
#include "qckt/su2.hpp"
#include "qckt/vec3.hpp"

using namespace qckt;
using testutil::Rng;

TEST_CASE("cross_fold basics") {
    CHECK(testutil::approx(cross_fold({kXhat, kYhat}), kZhat));
    // [a b b] = -a for perpendicular unit a, b
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        UnitVec3 a = rng.unit_vec();
        UnitVec3 b = rng.unit_vec_perp(a);
        CHECK(testutil::approx(cross_fold({a.vec(), b.vec(), b.vec()}), -a.vec(), 1e-12));
    }
    CHECK(norm(cross_fold({kXhat, kXhat, kYhat})) == doctest::Approx(0.0));
    CHECK_THROWS_AS(cross_fold(std::initializer_list<Vec3>{kXhat}), std::invalid_argument);
}

TEST_CASE("along and across") {
    CHECK(testutil::approx(along(kXhat + kZhat, kZhat), kZhat));
    CHECK(testutil::approx(across(kXhat + kZhat, kZhat), kXhat));
    CHECK_THROWS_AS(along(kXhat, Vec3{0, 0, 0}), std::invalid_argument);
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        Vec3 a = rng.unit_vec().vec() * rng.uniform(0.1, 3.0);
        Vec3 b = rng.unit_vec().vec() * rng.uniform(0.1, 3.0);
        Vec3 al = along(a, b), ac = across(a, b);
        CHECK(norm(al + ac - a) < 1e-12);
        CHECK(norm(cross(al, b)) < 1e-10);
        CHECK(std::abs(dot(ac, b)) < 1e-10);
        // across(a,b) = -[a b b]/|b|^2
        Vec3 alt = (-1.0 / norm2(b)) * cross_fold({a, b, b});
        CHECK(testutil::approx(ac, alt, 1e-12));
    }
}

TEST_CASE("paulion algebra") {
    CMat sz = paulion(kZhat);
    CHECK(sz(0, 0) == cplx{1, 0});
    CHECK(sz(1, 1) == cplx{-1, 0});
    CHECK(testutil::approx(paulion(kXhat) * paulion(kYhat), kI * paulion(kZhat), 1e-15));
    Rng rng(13);
    for (int t = 0; t < 100; ++t) {
        UnitVec3 a = rng.unit_vec(), b = rng.unit_vec();
        CHECK(testutil::approx(paulion(a.vec()) * paulion(a.vec()), CMat::identity(2), 1e-12));
        // product rule sigma_a sigma_b = a.b + i sigma_{a x b}
        CMat lhs = paulion(a.vec()) * paulion(b.vec());
        CMat rhs = cplx{dot(a.vec(), b.vec()), 0} * CMat::identity(2) +
                   kI * paulion(cross(a.vec(), b.vec()));
        CHECK(testutil::approx(lhs, rhs, 1e-12));
    }
}

TEST_CASE("su2_from_pair and su2_log") {
    CHECK(testutil::approx(su2_from_pair(kUx, kUx), CMat::identity(2), 1e-15));
    CHECK(testutil::approx(su2_from_pair(kUx, kUy), kI * paulion(kZhat), 1e-15));
    Rng rng(14);
    for (int t = 0; t < 100; ++t) {
        UnitVec3 a = rng.unit_vec(), b = rng.unit_vec();
        CMat u = su2_from_pair(a, b);
        CHECK(std::abs(det(u) - cplx{1, 0}) < 1e-12);
        // equals e^{i theta sigma_w} with cos theta = a.b  (series-expm oracle)
        Vec3 axb = cross(a.vec(), b.vec());
        if (norm(axb) > 1e-6) {
            double theta = std::atan2(norm(axb), dot(a.vec(), b.vec()));
            CMat gen = (kI * theta) * paulion(UnitVec3::normalized(axb).vec());
            CHECK(testutil::approx(u, testutil::expm_series(gen), 1e-12));
        }
    }
}

TEST_CASE("pair_from_su2") {
    // identity -> (x, x) under the deterministic default
    auto [a0, b0] = pair_from_su2(CMat::identity(2));
    CHECK(testutil::approx(a0.vec(), kXhat));
    CHECK(testutil::approx(b0.vec(), kXhat));
    // e^{i pi/4 sigma_z}: pair in the xy-plane at angle pi/4, cross along +z
    {
        CMat u = rot2(kUz, M_PI_4);
        auto [a, b] = pair_from_su2(u);
        CHECK(std::abs(a.z()) < 1e-12);
        CHECK(std::abs(b.z()) < 1e-12);
        CHECK(dot(a.vec(), b.vec()) == doctest::Approx(std::cos(M_PI_4)));
        CHECK(cross(a.vec(), b.vec()).z > 0);
        CHECK(testutil::approx(su2_from_pair(a, b), u, 1e-12));
    }
    // i sigma_z = e^{i pi/2 sigma_z}: perpendicular pair in the xy-plane
    {
        auto [a, b] = pair_from_su2(kI * paulion(kZhat));
        CHECK(std::abs(dot(a.vec(), b.vec())) < 1e-12);
        CHECK(std::abs(a.z()) < 1e-12);
    }
    Rng rng(15);
    for (int t = 0; t < 200; ++t) {
        CMat u = rng.su2();
        auto [a, b] = pair_from_su2(u);
        CHECK(testutil::approx(su2_from_pair(a, b), u, 1e-10));
    }
    // anchor respected
    for (int t = 0; t < 50; ++t) {
        UnitVec3 w = rng.unit_vec();
        double th = rng.uniform(0.2, 2.8);
        CMat u = rot2(w, th);
        UnitVec3 anchor = rng.unit_vec_perp(w);
        auto [a, b] = pair_from_su2(u, anchor);
        CHECK(testutil::approx(a.vec(), anchor.vec(), 1e-9));
        CHECK(testutil::approx(su2_from_pair(a, b), u, 1e-10));
    }
    CHECK_THROWS(pair_from_su2(rot2(kUz, 1.0), kUz));  // anchor along the axis
    CHECK_THROWS(pair_from_su2(cplx{2, 0} * CMat::identity(2)));
}

TEST_CASE("reflect") {
    CHECK(testutil::approx(reflect(kUx, kUx).vec(), kXhat));
    CHECK(testutil::approx(reflect(kUx, kUz).vec(), -kXhat));
    Rng rng(16);
    for (int t = 0; t < 100; ++t) {
        UnitVec3 a = rng.unit_vec(), r = rng.unit_vec();
        UnitVec3 f = reflect(a, r);
        // matrix-side oracle
        CMat lhs = paulion(r.vec()) * paulion(a.vec()) * paulion(r.vec());
        CHECK(testutil::approx(lhs, paulion(f.vec()), 1e-12));
        CHECK(testutil::approx(reflect(f, r).vec(), a.vec(), 1e-12));
    }
}

TEST_CASE("special_counterpart") {
    CMat a = kI * CMat::identity(4);
    CHECK(testutil::approx(special_counterpart(a), a, 1e-12));  // det = i^4 = 1
    // standard CNOT: det -1, principal 4th root e^{i pi/4}
    CMat cnot(4);
    cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1;
    CMat hat = special_counterpart(cnot);
    CHECK(std::abs(det(hat) - cplx{1, 0}) < 1e-10);
    CHECK(testutil::approx(hat, std::polar(1.0, -M_PI_4) * cnot, 1e-12));
    CHECK(testutil::approx(special_counterpart(hat), hat, 1e-12));
    CHECK_THROWS(special_counterpart(cplx{2, 0} * CMat::identity(2)));
}

TEST_CASE("gamma representation") {
    CHECK(testutil::approx(gamma_inv(outer(kXhat, kZhat)), kron(sigma_x(), sigma_z()), 1e-14));
    RMat3 l = outer(kXhat, kZhat);
    CHECK(frob(gamma_rep(gamma_inv(l)) - l) < 1e-13);
    CHECK(frob(gamma_rep(kron(sigma_y(), sigma_y())) - outer(kYhat, kYhat)) < 1e-13);
    CHECK(frob(gamma_rep(CMat::identity(4))) < 1e-14);
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        RMat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = rng.uniform(-2, 2);
        CHECK(frob(gamma_rep(gamma_inv(m)) - m) < 1e-13);
    }
}

TEST_CASE("simultaneous_svd") {
    {
        RMat3 a, b;
        for (int i = 0; i < 3; ++i) {
            a(i, i) = i + 1.0;
            b(i, i) = i + 4.0;
        }
        SimSvd<3> sv = simultaneous_svd(a, b);
        CHECK(frob(sv.u * sv.u.transposed() - RMat3::identity()) < 1e-12);
        RMat3 ra, rb;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double sa = 0, sb2 = 0;
                for (int k = 0; k < 3; ++k) {
                    sa += sv.u(i, k) * sv.da[k] * sv.v(j, k);
                    sb2 += sv.u(i, k) * sv.db[k] * sv.v(j, k);
                }
                ra(i, j) = sa;
                rb(i, j) = sb2;
            }
        CHECK(frob(ra - a) < 1e-10);
        CHECK(frob(rb - b) < 1e-10);
    }
    // B = 0: ordinary SVD
    Rng rng(18);
    for (int t = 0; t < 20; ++t) {
        RMat3 a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = rng.uniform(-1, 1);
        SimSvd<3> sv = svd(a);
        RMat3 rec;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += sv.u(i, k) * sv.da[k] * sv.v(j, k);
                rec(i, j) = s;
            }
        CHECK(frob(rec - a) < 1e-10);
        CHECK(sv.da[0] >= sv.da[1]);
        CHECK(sv.da[1] >= sv.da[2]);
        CHECK(sv.da[2] >= -1e-15);
    }
    // construct-then-recover on 1000 random commuting pairs
    int fails = 0;
    for (int t = 0; t < 1000; ++t) {
        // random orthogonal U0, V0 from normalized random bases
        RMat3 u0, v0;
        {
            UnitVec3 c1 = rng.unit_vec();
            RhonBasis b1 = complete_rhon(c1);
            set_col(u0, 0, b1.f1.vec());
            set_col(u0, 1, b1.f2.vec());
            set_col(u0, 2, b1.f3.vec());
            UnitVec3 c2 = rng.unit_vec();
            RhonBasis b2 = complete_rhon(c2);
            set_col(v0, 0, b2.f1.vec());
            set_col(v0, 1, b2.f2.vec());
            set_col(v0, 2, b2.f3.vec());
        }
        RMat3 d1, d2;
        for (int i = 0; i < 3; ++i) {
            d1(i, i) = rng.uniform(-2, 2);
            d2(i, i) = rng.uniform(-2, 2);
        }
        if (t % 5 == 0) d2(1, 1) = d2(0, 0);  // throw in degeneracies
        if (t % 7 == 0) { d1(1, 1) = d1(0, 0); d2(1, 1) = d2(0, 0); }
        RMat3 a = u0 * d1 * v0.transposed();
        RMat3 b = u0 * d2 * v0.transposed();
        SimSvd<3> sv = simultaneous_svd(a, b);
        RMat3 ra, rb;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double sa = 0, sb2 = 0;
                for (int k = 0; k < 3; ++k) {
                    sa += sv.u(i, k) * sv.da[k] * sv.v(j, k);
                    sb2 += sv.u(i, k) * sv.db[k] * sv.v(j, k);
                }
                ra(i, j) = sa;
                rb(i, j) = sb2;
            }
        if (frob(ra - a) > 1e-8 || frob(rb - b) > 1e-8) ++fails;
    }
    CHECK(fails == 0);
    // non-commuting pair is rejected
    RMat3 a, b;
    a(0, 1) = 1;
    b(1, 0) = 1;
    b(0, 0) = 1;
    CHECK_THROWS_AS(simultaneous_svd(a, b), std::invalid_argument);
}

TEST_CASE("complete_rhon") {
    RhonBasis bz = complete_rhon(kUz);
    CHECK(testutil::approx(bz.f2.vec(), kXhat));
    CHECK(testutil::approx(bz.f3.vec(), kYhat));
    RhonBasis bx = complete_rhon(kUx);
    CHECK(testutil::approx(bx.f2.vec(), kYhat));
    CHECK(testutil::approx(bx.f3.vec(), kZhat));
    Rng rng(19);
    for (int t = 0; t < 200; ++t) {
        RhonBasis b = complete_rhon(rng.unit_vec());  // construction checks the invariants
        CHECK(std::abs(triple(b.f1.vec(), b.f2.vec(), b.f3.vec()) - 1.0) < 1e-10);
    }
}

TEST_CASE("su2_log near the identity") {
    // regression: rotation angles between the +-I cutoff and the unit-vector
    // tolerance used to crash the axis normalization
    Rng rng(27);
    for (double theta : {6e-12, 3e-12, 1.00001e-12, 8e-13, 1e-14}) {
        CMat u = rot2(rng.unit_vec(), theta);
        AxisAngle aa = su2_log(u);  // must not throw
        CHECK(testutil::approx(rot2(aa.axis, aa.theta), u, 1e-10));
        auto gates = u2_gates(0, u);
        CHECK(testutil::approx(gates_unitary(gates, 1), u, 1e-10));
    }
}

TEST_CASE("simultaneous_svd keeps small singular directions orthonormal") {
    // regression: u = Av/|Av| for a tiny singular value carries direction
    // error of order eps/sigma; the recovered frames must stay orthonormal
    Rng rng(28);
    for (int t = 0; t < 200; ++t) {
        RMat3 u0, v0;
        RhonBasis b1 = complete_rhon(rng.unit_vec());
        RhonBasis b2 = complete_rhon(rng.unit_vec());
        set_col(u0, 0, b1.f1.vec());
        set_col(u0, 1, b1.f2.vec());
        set_col(u0, 2, b1.f3.vec());
        set_col(v0, 0, b2.f1.vec());
        set_col(v0, 1, b2.f2.vec());
        set_col(v0, 2, b2.f3.vec());
        RMat3 d1, d2;
        d1(0, 0) = rng.uniform(0.5, 1.0);
        d1(1, 1) = rng.uniform(-9, 9) * 1e-7;  // tiny pair
        d1(2, 2) = 0.0;
        d2(0, 0) = 0.0;
        d2(1, 1) = rng.uniform(-9, 9) * 1e-7;
        d2(2, 2) = rng.uniform(0.5, 1.0);
        RMat3 a = u0 * d1 * v0.transposed();
        RMat3 b = u0 * d2 * v0.transposed();
        SimSvd<3> sv = simultaneous_svd(a, b);
        CHECK(frob(sv.u * sv.u.transposed() - RMat3::identity()) < 1e-12);
        CHECK(frob(sv.v * sv.v.transposed() - RMat3::identity()) < 1e-12);
        RMat3 ra, rb;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double sa = 0, sb2 = 0;
                for (int k = 0; k < 3; ++k) {
                    sa += sv.u(i, k) * sv.da[k] * sv.v(j, k);
                    sb2 += sv.u(i, k) * sv.db[k] * sv.v(j, k);
                }
                ra(i, j) = sa;
                rb(i, j) = sb2;
            }
        CHECK(frob(ra - a) < 1e-10);
        CHECK(frob(rb - b) < 1e-10);
    }
}

TEST_CASE("rotate_about matches paulion conjugation") {
    Rng rng(20);
    for (int t = 0; t < 50; ++t) {
        UnitVec3 w = rng.unit_vec(), v = rng.unit_vec();
        double theta = rng.uniform(-3, 3);
        // e^{i theta sigma_w} sigma_v e^{-i theta sigma_w} = sigma_{R(w,-2 theta) v}
        CMat lhs = rot2(w, theta) * paulion(v.vec()) * rot2(w, -theta);
        Vec3 rv = rotate_about(v.vec(), w, -2.0 * theta);
        CHECK(testutil::approx(lhs, paulion(rv), 1e-12));
    }
}
