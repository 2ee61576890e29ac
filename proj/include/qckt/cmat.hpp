#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qckt/rmat.hpp"
#include "qckt/vec3.hpp"

namespace qckt {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

/// Dense complex matrix of small runtime dimension (2, 4 or 8 in this library).
class CMat {
  public:
    CMat() = default;
    explicit CMat(int dim) : dim_(dim), m_(static_cast<std::size_t>(dim) * dim) {}

    static CMat identity(int dim) {
        CMat r(dim);
        for (int i = 0; i < dim; ++i) r(i, i) = 1.0;
        return r;
    }
    static CMat zero(int dim) { return CMat(dim); }

    int dim() const { return dim_; }

    cplx operator()(int i, int j) const { return m_[static_cast<std::size_t>(i) * dim_ + j]; }
    cplx& operator()(int i, int j) { return m_[static_cast<std::size_t>(i) * dim_ + j]; }

    CMat adjoint() const {
        CMat r(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) r(j, i) = std::conj((*this)(i, j));
        return r;
    }
    CMat transposed() const {
        CMat r(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }
    CMat conjugated() const {
        CMat r(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) r(i, j) = std::conj((*this)(i, j));
        return r;
    }

    cplx trace() const {
        cplx t = 0;
        for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    friend CMat operator+(const CMat& a, const CMat& b) {
        CMat r(a.dim_);
        for (std::size_t k = 0; k < a.m_.size(); ++k) r.m_[k] = a.m_[k] + b.m_[k];
        return r;
    }
    friend CMat operator-(const CMat& a, const CMat& b) {
        CMat r(a.dim_);
        for (std::size_t k = 0; k < a.m_.size(); ++k) r.m_[k] = a.m_[k] - b.m_[k];
        return r;
    }
    friend CMat operator*(cplx s, const CMat& a) {
        CMat r(a.dim_);
        for (std::size_t k = 0; k < a.m_.size(); ++k) r.m_[k] = s * a.m_[k];
        return r;
    }
    friend CMat operator*(const CMat& a, cplx s) { return s * a; }
    friend CMat operator*(const CMat& a, const CMat& b) {
        if (a.dim_ != b.dim_) throw std::invalid_argument("CMat::operator*: dimension mismatch");
        CMat r(a.dim_);
        for (int i = 0; i < a.dim_; ++i)
            for (int k = 0; k < a.dim_; ++k) {
                cplx aik = a(i, k);
                if (aik == cplx{}) continue;
                for (int j = 0; j < a.dim_; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }

  private:
    int dim_ = 0;
    std::vector<cplx> m_;
};

inline double frob(const CMat& a) {
    double s = 0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

inline double frob_dist(const CMat& a, const CMat& b) { return frob(a - b); }

inline CMat kron(const CMat& a, const CMat& b) {
    CMat r(a.dim() * b.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) {
            cplx aij = a(i, j);
            if (aij == cplx{}) continue;
            for (int k = 0; k < b.dim(); ++k)
                for (int l = 0; l < b.dim(); ++l)
                    r(i * b.dim() + k, j * b.dim() + l) = aij * b(k, l);
        }
    return r;
}

inline bool is_unitary(const CMat& a, double tol = 1e-10) {
    CMat p = a * a.adjoint();
    return frob_dist(p, CMat::identity(a.dim())) <= tol * a.dim();
}

inline void require_unitary(const CMat& a, const char* who, double tol = 1e-10) {
    if (!is_unitary(a, tol))
        throw std::invalid_argument(std::string(who) + ": matrix is not unitary within tolerance");
}

/// Determinant by Gaussian elimination with partial pivoting.
inline cplx det(CMat a) {
    int n = a.dim();
    cplx d = 1.0;
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
        if (std::abs(a(p, c)) < 1e-300) return 0.0;
        if (p != c) {
            for (int j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
            d = -d;
        }
        d *= a(c, c);
        for (int r = c + 1; r < n; ++r) {
            cplx f = a(r, c) / a(c, c);
            for (int j = c; j < n; ++j) a(r, j) -= f * a(c, j);
        }
    }
    return d;
}

inline CMat sigma_x() {
    CMat s(2);
    s(0, 1) = 1;
    s(1, 0) = 1;
    return s;
}
inline CMat sigma_y() {
    CMat s(2);
    s(0, 1) = -kI;
    s(1, 0) = kI;
    return s;
}
inline CMat sigma_z() {
    CMat s(2);
    s(0, 0) = 1;
    s(1, 1) = -1;
    return s;
}

/// sigma . a for a real 3-vector a (a Paulion). Hermitian; unit a gives an involution.
inline CMat paulion(Vec3 a) {
    CMat s(2);
    s(0, 0) = a.z;
    s(0, 1) = cplx{a.x, -a.y};
    s(1, 0) = cplx{a.x, a.y};
    s(1, 1) = -a.z;
    return s;
}

/// e^{i theta sigma_axis} = cos(theta) I + i sin(theta) sigma_axis.
inline CMat rot2(const UnitVec3& axis, double theta) {
    CMat r = std::cos(theta) * CMat::identity(2);
    return r + (kI * std::sin(theta)) * paulion(axis.vec());
}

/// A / det(A)^{1/n} with the principal branch (argument in (-pi, pi]).
inline CMat special_counterpart(const CMat& a) {
    require_unitary(a, "special_counterpart");
    cplx d = det(a);
    // Keep determinants on the negative real axis on the arg = +pi side of the cut.
    if (std::abs(d.imag()) < 1e-13 * std::abs(d)) d = cplx{d.real(), 0.0};
    double arg = std::arg(d);  // (-pi, pi]
    cplx root = std::polar(std::pow(std::abs(d), 1.0 / a.dim()), arg / a.dim());
    return (1.0 / root) * a;
}

/// Gamma representation: the 3x3 real matrix with entries (1/4) tr(sigma_{Xi,Xj} M).
inline RMat3 gamma_rep(const CMat& m) {
    if (m.dim() != 4) throw std::invalid_argument("gamma_rep: need a 4x4 matrix");
    const CMat sig[3] = {sigma_x(), sigma_y(), sigma_z()};
    RMat3 l;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            CMat basis = kron(sig[i], sig[j]);
            cplx t = (basis * m).trace();
            l(i, j) = 0.25 * t.real();
        }
    return l;
}

/// Inverse Gamma map: sum_{ij} L_ij sigma_{Xi,Xj}.
inline CMat gamma_inv(const RMat3& l) {
    const CMat sig[3] = {sigma_x(), sigma_y(), sigma_z()};
    CMat m(4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (l(i, j) == 0.0) continue;
            m = m + l(i, j) * kron(sig[i], sig[j]);
        }
    return m;
}

/// Eigendecomposition of a Hermitian matrix by complex Jacobi rotations.
/// Eigenvalues descending, eigenvectors as columns of a unitary matrix.
struct HermEig {
    std::vector<double> values;
    CMat vectors;
};

inline HermEig herm_eig(CMat a) {
    int n = a.dim();
    CMat v = CMat::identity(n);
    for (int sweep = 0; sweep < 80; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += std::norm(a(i, j));
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                cplx apq = a(p, q);
                double mag = std::abs(apq);
                if (mag < 1e-300) continue;
                cplx phase = apq / mag;
                double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                cplx s = t * c * phase;
                for (int k = 0; k < n; ++k) {
                    cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - std::conj(s) * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = std::conj(s) * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - std::conj(s) * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    HermEig out;
    out.values.resize(n);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a(i, i).real() > a(j, j).real(); });
    out.vectors = CMat(n);
    for (int i = 0; i < n; ++i) {
        out.values[i] = a(order[i], order[i]).real();
        for (int k = 0; k < n; ++k) out.vectors(k, i) = v(k, order[i]);
    }
    return out;
}

}  // namespace qckt
