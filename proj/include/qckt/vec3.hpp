#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>

namespace qckt {

inline constexpr double kGeomTol = 1e-9;    // parallel / perpendicular / zero-vector predicates
inline constexpr double kMatTol = 1e-8;     // default Frobenius-norm matrix equality
inline constexpr double kUnitTol = 1e-12;   // unit-norm construction slack

/// Plain 3-vector of doubles. Column-vector semantics in matrix expressions.
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return s * a; }
    friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
    Vec3& operator+=(Vec3 b) { *this = *this + b; return *this; }
    Vec3& operator-=(Vec3 b) { *this = *this - b; return *this; }
};

inline constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline constexpr Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline constexpr double norm2(Vec3 a) { return dot(a, a); }
/// Scalar triple product a x b . c
inline constexpr double triple(Vec3 a, Vec3 b, Vec3 c) { return dot(cross(a, b), c); }

inline bool finite(Vec3 a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

inline constexpr Vec3 kXhat{1, 0, 0};
inline constexpr Vec3 kYhat{0, 1, 0};
inline constexpr Vec3 kZhat{0, 0, 1};

/// Left-nested r-fold cross product ((v1 x v2) x v3) ... x vr, r >= 2.
inline Vec3 cross_fold(std::span<const Vec3> vs) {
    if (vs.size() < 2)
        throw std::invalid_argument("cross_fold: need at least 2 vectors, got " +
                                    std::to_string(vs.size()));
    Vec3 acc = cross(vs[0], vs[1]);
    for (std::size_t k = 2; k < vs.size(); ++k) acc = cross(acc, vs[k]);
    return acc;
}
inline Vec3 cross_fold(std::initializer_list<Vec3> vs) {
    return cross_fold(std::span<const Vec3>(vs.begin(), vs.size()));
}

/// Part of a along b: (a.b) b / |b|^2.
inline Vec3 along(Vec3 a, Vec3 b) {
    double b2 = norm2(b);
    if (b2 <= kUnitTol * kUnitTol)
        throw std::invalid_argument("along: direction vector is numerically zero");
    return (dot(a, b) / b2) * b;
}

/// Part of a across b: a - along(a, b). Equals -[a b b]/|b|^2.
inline Vec3 across(Vec3 a, Vec3 b) { return a - along(a, b); }

inline bool parallel(Vec3 a, Vec3 b, double tol = kGeomTol) { return norm(cross(a, b)) <= tol; }
inline bool perpendicular(Vec3 a, Vec3 b, double tol = kGeomTol) { return std::abs(dot(a, b)) <= tol; }

/// Unit 3-vector. Construction enforces | |v| - 1 | <= 1e-12, then renormalizes exactly.
class UnitVec3 {
  public:
    UnitVec3() : v_(kZhat) {}
    explicit UnitVec3(Vec3 v) {
        double n = norm(v);
        if (!finite(v) || std::abs(n - 1.0) > kUnitTol)
            throw std::invalid_argument("UnitVec3: vector norm " + std::to_string(n) +
                                        " is not 1 within 1e-12");
        // leave already-unit vectors untouched so normalization is idempotent
        v_ = (std::abs(n - 1.0) <= 1e-13) ? v : v / n;
    }
    /// Normalize an arbitrary nonzero vector.
    static UnitVec3 normalized(Vec3 v) {
        double n = norm(v);
        if (!(n > kUnitTol))
            throw std::invalid_argument("UnitVec3::normalized: vector is numerically zero");
        UnitVec3 u;
        u.v_ = (std::abs(n - 1.0) <= 1e-13) ? v : v / n;
        return u;
    }

    const Vec3& vec() const { return v_; }
    operator const Vec3&() const { return v_; }
    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    UnitVec3 operator-() const { UnitVec3 u; u.v_ = -v_; return u; }

  private:
    Vec3 v_;
};

inline const UnitVec3 kUx = UnitVec3(kXhat);
inline const UnitVec3 kUy = UnitVec3(kYhat);
inline const UnitVec3 kUz = UnitVec3(kZhat);

/// Reflect a on r: along(a,r) - across(a,r). Matches sigma_r sigma_a sigma_r = sigma_reflect(a,r).
inline UnitVec3 reflect(const UnitVec3& a, const UnitVec3& r) {
    Vec3 f = along(a.vec(), r.vec()) - across(a.vec(), r.vec());
    return UnitVec3::normalized(f);
}

/// Right-handed orthonormal basis (f1, f2, f3), f1 x f2 = f3.
struct RhonBasis {
    UnitVec3 f1, f2, f3;

    RhonBasis(UnitVec3 a, UnitVec3 b, UnitVec3 c) : f1(a), f2(b), f3(c) {
        const double tol = 1e-10;
        if (std::abs(dot(f1, f2)) > tol || std::abs(dot(f2, f3)) > tol ||
            std::abs(dot(f1, f3)) > tol)
            throw std::invalid_argument("RhonBasis: vectors are not pairwise orthogonal");
        if (std::abs(triple(f1, f2, f3) - 1.0) > tol)
            throw std::invalid_argument("RhonBasis: basis is not right-handed");
    }
};

/// Complete a unit vector u to a RHON basis (u, f2, u x f2).
/// f2 is the normalized across-part of the coordinate axis with the smallest
/// |component| in u; ties broken in x, y, z order.
inline RhonBasis complete_rhon(const UnitVec3& u) {
    const Vec3 axes[3] = {kXhat, kYhat, kZhat};
    int best = 0;
    double bestmag = std::abs(u.vec()[0]);
    for (int k = 1; k < 3; ++k) {
        double m = std::abs(u.vec()[k]);
        if (m < bestmag - 1e-15) {
            best = k;
            bestmag = m;
        }
    }
    UnitVec3 f2 = UnitVec3::normalized(across(axes[best], u.vec()));
    UnitVec3 f3 = UnitVec3::normalized(cross(u.vec(), f2.vec()));
    return RhonBasis(u, f2, f3);
}

/// RHON basis (h1, v, h3) whose middle vector is v.
inline RhonBasis rhon_with_middle(const UnitVec3& v) {
    RhonBasis cr = complete_rhon(v);
    // (f3, v, f2): f3 x v = (v x f2) x v = f2.
    return RhonBasis(cr.f3, v, cr.f2);
}

/// Rotate v about a unit axis by angle (Rodrigues).
inline Vec3 rotate_about(Vec3 v, const UnitVec3& axis, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    Vec3 k = axis.vec();
    return c * v + s * cross(k, v) + (1.0 - c) * dot(k, v) * k;
}

}  // namespace qckt
