#pragma once

// Shared test utilities: deterministic random draws and oracles kept
// independent of the library paths they check.

#include <cstdint>
#include <random>

#include "qckt/circuit.hpp"
#include "qckt/cmat.hpp"
#include "qckt/vec3.hpp"

namespace testutil {

using qckt::CMat;
using qckt::cplx;
using qckt::UnitVec3;
using qckt::Vec3;

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // [0, 1)
        return (eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gauss() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    UnitVec3 unit_vec() {
        while (true) {
            Vec3 v{gauss(), gauss(), gauss()};
            if (qckt::norm(v) > 1e-6) return UnitVec3::normalized(v);
        }
    }

    /// Unit vector perpendicular to u.
    UnitVec3 unit_vec_perp(const UnitVec3& u) {
        while (true) {
            Vec3 v = qckt::across(unit_vec().vec(), u.vec());
            if (qckt::norm(v) > 1e-6) return UnitVec3::normalized(v);
        }
    }

    /// Haar-ish random SU(2) element (uniform axis, uniform angle).
    CMat su2() {
        return qckt::rot2(unit_vec(), uniform(-M_PI, M_PI));
    }

    qckt::DcNot dcnot(int wi = 0, int wj = 1) { return {wi, unit_vec(), wj, unit_vec()}; }

  private:
    std::mt19937_64 eng_;
    bool have_ = false;
    double spare_ = 0.0;
};

/// Independent matrix-exponential oracle: plain series summation.
inline CMat expm_series(const CMat& m) {
    CMat acc = CMat::identity(m.dim());
    CMat term = CMat::identity(m.dim());
    for (int k = 1; k <= 64; ++k) {
        term = (cplx{1.0 / k, 0.0}) * (term * m);
        acc = acc + term;
        if (qckt::frob(term) < 1e-18) break;
    }
    return acc;
}

inline bool approx(const CMat& a, const CMat& b, double tol) {
    return qckt::frob_dist(a, b) <= tol;
}

inline bool approx(Vec3 a, Vec3 b, double tol = 1e-10) { return qckt::norm(a - b) <= tol; }

}  // namespace testutil
