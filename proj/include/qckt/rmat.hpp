#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qckt/vec3.hpp"

namespace qckt {

/// Small fixed-size real matrix, row-major.
template <int N>
struct RMat {
    std::array<double, static_cast<std::size_t>(N) * N> m{};

    static constexpr int dim = N;

    double operator()(int i, int j) const { return m[static_cast<std::size_t>(i) * N + j]; }
    double& operator()(int i, int j) { return m[static_cast<std::size_t>(i) * N + j]; }

    static RMat identity() {
        RMat r;
        for (int i = 0; i < N; ++i) r(i, i) = 1.0;
        return r;
    }

    RMat transposed() const {
        RMat r;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    friend RMat operator+(const RMat& a, const RMat& b) {
        RMat r;
        for (std::size_t k = 0; k < a.m.size(); ++k) r.m[k] = a.m[k] + b.m[k];
        return r;
    }
    friend RMat operator-(const RMat& a, const RMat& b) {
        RMat r;
        for (std::size_t k = 0; k < a.m.size(); ++k) r.m[k] = a.m[k] - b.m[k];
        return r;
    }
    friend RMat operator*(double s, const RMat& a) {
        RMat r;
        for (std::size_t k = 0; k < a.m.size(); ++k) r.m[k] = s * a.m[k];
        return r;
    }
    friend RMat operator*(const RMat& a, const RMat& b) {
        RMat r;
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < N; ++k) {
                double aik = a(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < N; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }
};

using RMat2 = RMat<2>;
using RMat3 = RMat<3>;

template <int N>
inline double frob(const RMat<N>& a) {
    double s = 0;
    for (double v : a.m) s += v * v;
    return std::sqrt(s);
}

inline Vec3 matvec(const RMat3& a, Vec3 v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

inline RMat3 outer(Vec3 a, Vec3 b) {
    RMat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = a[i] * b[j];
    return r;
}

inline Vec3 col(const RMat3& a, int j) { return {a(0, j), a(1, j), a(2, j)}; }
inline Vec3 row(const RMat3& a, int i) { return {a(i, 0), a(i, 1), a(i, 2)}; }
inline void set_col(RMat3& a, int j, Vec3 v) {
    a(0, j) = v.x;
    a(1, j) = v.y;
    a(2, j) = v.z;
}
inline double det(const RMat3& a) {
    return triple(col(a, 0), col(a, 1), col(a, 2));
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (descending) and the orthogonal matrix of column eigenvectors.
template <int N>
struct SymEig {
    std::array<double, N> values{};
    RMat<N> vectors;  // columns
};

template <int N>
inline SymEig<N> sym_eig(RMat<N> a) {
    RMat<N> v = RMat<N>::identity();
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < N; ++p)
            for (int q = p + 1; q < N; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < N; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < N; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < N; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    SymEig<N> out;
    std::array<int, N> order{};
    std::iota(order.begin(), order.end(), 0);
    std::array<double, N> diag{};
    for (int i = 0; i < N; ++i) diag[i] = a(i, i);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return diag[i] > diag[j]; });
    for (int i = 0; i < N; ++i) {
        out.values[i] = diag[order[i]];
        for (int k = 0; k < N; ++k) out.vectors(k, i) = v(k, order[i]);
    }
    return out;
}

/// Simultaneous singular value decomposition of real matrices A, B:
/// A = U Da V^T, B = U Db V^T with U, V orthogonal and Da >= 0.
/// Requires the left and right commutators A^T B - B^T A and A B^T - B A^T to
/// vanish within tol = 1e-8 * max(|A|, |B|, 1).
template <int N>
struct SimSvd {
    RMat<N> u, v;
    std::array<double, N> da{}, db{};
};

namespace detail {

// Orthonormal completion: fill null columns of u (flagged by used[j] == false)
// with vectors orthogonal to the used ones. Deterministic.
template <int N>
inline void complete_orthonormal(RMat<N>& u, bool* used) {
    for (int j = 0; j < N; ++j) {
        if (used[j]) continue;
        for (int axis = 0; axis < N; ++axis) {
            std::array<double, N> cand{};
            cand[axis] = 1.0;
            for (int k = 0; k < N; ++k) {
                if (!used[k] && k != j) continue;
                if (k == j) continue;
                double proj = 0;
                for (int i = 0; i < N; ++i) proj += cand[i] * u(i, k);
                for (int i = 0; i < N; ++i) cand[i] -= proj * u(i, k);
            }
            double n2 = 0;
            for (double c : cand) n2 += c * c;
            if (n2 > 1e-4) {
                double n = std::sqrt(n2);
                for (int i = 0; i < N; ++i) u(i, j) = cand[i] / n;
                used[j] = true;
                break;
            }
        }
    }
}

}  // namespace detail

template <int N>
inline SimSvd<N> simultaneous_svd(const RMat<N>& a, const RMat<N>& b) {
    const double scale = std::max({frob(a), frob(b), 1.0});
    const double tol = 1e-8 * scale;
    {
        RMat<N> at = a.transposed(), bt = b.transposed();
        RMat<N> left = at * b - bt * a;
        RMat<N> right = a * bt - b * at;
        if (frob(left) > tol || frob(right) > tol)
            throw std::invalid_argument(
                "simultaneous_svd: left/right commutators nonzero; matrices are not "
                "simultaneously diagonalizable");
    }

    // Right vectors from A^T A + B^T B. Degenerate eigenvalue clusters are
    // re-diagonalized hierarchically: first against A^T A restricted to the
    // cluster, then against the symmetrized A^T B within any sub-cluster.
    RMat<N> ata = a.transposed() * a;
    RMat<N> atb = a.transposed() * b;
    {
        RMat<N> s = atb + atb.transposed();
        atb = 0.5 * s;
    }
    RMat<N> sv = ata + b.transposed() * b;
    SymEig<N> ev = sym_eig(sv);
    RMat<N> v = ev.vectors;

    const double cluster_tol = 1e-7 * std::max(std::abs(ev.values[0]), 1.0);
    // Diagonalize `criterion` restricted to columns [start, end) of v, in place.
    // Restricted eigenvalues come out descending; returns them.
    auto restrict_diag = [&](const RMat<N>& criterion, int start, int end,
                             double* restricted_vals) {
        int m = end - start;
        RMat<N> sub;
        for (int i = m; i < N; ++i) sub(i, i) = -1e30;  // park unused coordinates last
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double s = 0;
                for (int r = 0; r < N; ++r)
                    for (int c = 0; c < N; ++c)
                        s += v(r, start + i) * criterion(r, c) * v(c, start + j);
                sub(i, j) = s;
            }
        SymEig<N> sube = sym_eig(sub);
        RMat<N> nv = v;
        for (int jj = 0; jj < m; ++jj) {
            restricted_vals[jj] = sube.values[jj];
            for (int r = 0; r < N; ++r) {
                double s = 0;
                for (int ii = 0; ii < m; ++ii) s += v(r, start + ii) * sube.vectors(ii, jj);
                nv(r, start + jj) = s;
            }
        }
        v = nv;
    };
    {
        int start = 0;
        while (start < N) {
            int end = start + 1;
            while (end < N && std::abs(ev.values[end] - ev.values[start]) <= cluster_tol) ++end;
            if (end - start > 1) {
                double avals[N] = {};
                restrict_diag(ata, start, end, avals);
                int s2 = start;
                while (s2 < end) {
                    int e2 = s2 + 1;
                    while (e2 < end && std::abs(avals[e2 - start] - avals[s2 - start]) <= cluster_tol)
                        ++e2;
                    if (e2 - s2 > 1) {
                        double bvals[N] = {};
                        restrict_diag(atb, s2, e2, bvals);
                    }
                    s2 = e2;
                }
            }
            start = end;
        }
    }

    SimSvd<N> out;
    out.v = v;
    bool used[N] = {};
    const double null_tol = 1e-10 * scale;
    for (int j = 0; j < N; ++j) {
        double av[N] = {}, bv[N] = {};
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < N; ++k) {
                av[i] += a(i, k) * v(k, j);
                bv[i] += b(i, k) * v(k, j);
            }
        double an = 0, bn = 0;
        for (int i = 0; i < N; ++i) {
            an += av[i] * av[i];
            bn += bv[i] * bv[i];
        }
        an = std::sqrt(an);
        bn = std::sqrt(bn);
        if (an > null_tol) {
            for (int i = 0; i < N; ++i) out.u(i, j) = av[i] / an;
            out.da[j] = an;
            double d = 0;
            for (int i = 0; i < N; ++i) d += out.u(i, j) * bv[i];
            out.db[j] = d;
            used[j] = true;
        } else if (bn > null_tol) {
            for (int i = 0; i < N; ++i) out.u(i, j) = bv[i] / bn;
            out.da[j] = 0.0;
            out.db[j] = bn;
            used[j] = true;
        } else {
            out.da[j] = 0.0;
            out.db[j] = 0.0;
        }
    }
    detail::complete_orthonormal(out.u, used);
    // Columns built from small singular values carry direction error of order
    // eps/sigma; a Gram-Schmidt pass in descending-sigma order restores
    // orthonormality, then the diagonals are refreshed against the new U.
    for (int j = 0; j < N; ++j) {
        for (int k = 0; k < j; ++k) {
            double proj = 0;
            for (int i = 0; i < N; ++i) proj += out.u(i, k) * out.u(i, j);
            for (int i = 0; i < N; ++i) out.u(i, j) -= proj * out.u(i, k);
        }
        double n2 = 0;
        for (int i = 0; i < N; ++i) n2 += out.u(i, j) * out.u(i, j);
        double n = std::sqrt(n2);
        if (n > 1e-8)
            for (int i = 0; i < N; ++i) out.u(i, j) /= n;
    }
    for (int j = 0; j < N; ++j) {
        double da = 0, db = 0;
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < N; ++k) {
                da += out.u(i, j) * a(i, k) * v(k, j);
                db += out.u(i, j) * b(i, k) * v(k, j);
            }
        out.da[j] = std::abs(da) < 1e-14 * scale ? 0.0 : da;
        out.db[j] = std::abs(db) < 1e-14 * scale ? 0.0 : db;
    }
    return out;
}

/// Ordinary SVD of a single matrix as the B = 0 case.
template <int N>
inline SimSvd<N> svd(const RMat<N>& a) {
    return simultaneous_svd(a, RMat<N>{});
}

}  // namespace qckt
