#pragma once

#include <optional>
#include <utility>

#include "qckt/cmat.hpp"
#include "qckt/vec3.hpp"

namespace qckt {

/// sigma_a sigma_b for unit a, b. Always in SU(2): equals e^{i theta sigma_w}
/// with cos(theta) = a.b and w along a x b.
inline CMat su2_from_pair(const UnitVec3& a, const UnitVec3& b) {
    return paulion(a.vec()) * paulion(b.vec());
}

/// Axis-angle form of U in SU(2): U = e^{i theta sigma_w}, theta in [0, pi].
/// For U = +-I the axis defaults to z.
struct AxisAngle {
    UnitVec3 axis;
    double theta = 0.0;
};

inline AxisAngle su2_log(const CMat& u) {
    if (u.dim() != 2) throw std::invalid_argument("su2_log: need a 2x2 matrix");
    double c = 0.5 * u.trace().real();
    Vec3 sv{0.5 * (u(1, 0) + u(0, 1)).imag(), 0.5 * (u(0, 1) - u(1, 0)).real(),
            0.5 * (u(0, 0) - u(1, 1)).imag()};
    double s = norm(sv);
    AxisAngle out;
    if (s <= 1e-11) {  // treat as +-I; the axis would be rounding noise
        out.axis = kUz;
        out.theta = (c >= 0.0) ? 0.0 : M_PI;
        return out;
    }
    out.axis = UnitVec3::normalized(sv);
    out.theta = std::atan2(s, c);
    return out;
}

/// A (non-unique) pair of unit vectors (a, b) with sigma_a sigma_b = U for
/// U in SU(2). Both vectors lie in the plane perpendicular to the rotation
/// axis of U; a x b points along that axis.
///
/// Defaults: for U = +-I the pair is (x, +-x); otherwise the first vector is
/// complete_rhon(w).f2 for the rotation axis w. A supplied anchor (which must
/// lie in the admissible plane within 1e-9) becomes the first vector instead;
/// deflation uses this to align rotation planes.
inline std::pair<UnitVec3, UnitVec3> pair_from_su2(
    const CMat& u, std::optional<UnitVec3> anchor = std::nullopt) {
    require_unitary(u, "pair_from_su2");
    if (std::abs(det(u) - cplx{1.0, 0.0}) > 1e-10)
        throw std::invalid_argument("pair_from_su2: determinant is not 1 within 1e-10");
    AxisAngle aa = su2_log(u);
    double s = std::sin(aa.theta);
    if (std::abs(s) <= 1e-11) {
        // U = +-I
        UnitVec3 a = anchor.value_or(kUx);
        UnitVec3 b = (aa.theta < M_PI_2) ? a : -a;
        return {a, b};
    }
    UnitVec3 a = anchor ? *anchor : complete_rhon(aa.axis).f2;
    if (std::abs(dot(a.vec(), aa.axis.vec())) > 1e-9)
        throw std::invalid_argument(
            "pair_from_su2: anchor is outside the plane perpendicular to the rotation axis");
    a = UnitVec3::normalized(across(a.vec(), aa.axis.vec()));
    Vec3 b = std::cos(aa.theta) * a.vec() + s * cross(aa.axis.vec(), a.vec());
    return {a, UnitVec3::normalized(b)};
}

}  // namespace qckt
