#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace pfsi {

/// Fixed-size vector for spatial dimension D.
template <int D>
struct Vec {
    std::array<double, D> v{};

    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < D; ++i) v[i] += o.v[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < D; ++i) v[i] -= o.v[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (int i = 0; i < D; ++i) v[i] *= s;
        return *this;
    }

    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double s, Vec a) { return a *= s; }

    double dot(const Vec& o) const {
        double s = 0;
        for (int i = 0; i < D; ++i) s += v[i] * o.v[i];
        return s;
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

/// Dense DxD matrix, row-major.
template <int D>
struct Mat {
    std::array<double, D * D> a{};

    static Mat identity() {
        Mat m;
        for (int i = 0; i < D; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return a[i * D + j]; }
    double operator()(int i, int j) const { return a[i * D + j]; }

    Vec<D> apply(const Vec<D>& x) const {
        Vec<D> y;
        for (int i = 0; i < D; ++i) {
            double s = 0;
            for (int j = 0; j < D; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    /// y = M^T x
    Vec<D> apply_transpose(const Vec<D>& x) const {
        Vec<D> y;
        for (int j = 0; j < D; ++j) {
            double s = 0;
            for (int i = 0; i < D; ++i) s += (*this)(i, j) * x[i];
            y[j] = s;
        }
        return y;
    }

    Mat mul(const Mat& o) const {
        Mat r;
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) {
                double s = 0;
                for (int k = 0; k < D; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Mat transposed() const {
        Mat r;
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    double det() const {
        if constexpr (D == 2) {
            return a[0] * a[3] - a[1] * a[2];
        } else {
            const Mat& m = *this;
            return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                 - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                 + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        }
    }

    Mat inverse() const {
        Mat r;
        double d = det();
        if constexpr (D == 2) {
            r(0, 0) = a[3] / d;
            r(0, 1) = -a[1] / d;
            r(1, 0) = -a[2] / d;
            r(1, 1) = a[0] / d;
        } else {
            const Mat& m = *this;
            r(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) / d;
            r(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / d;
            r(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / d;
            r(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) / d;
            r(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / d;
            r(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / d;
            r(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) / d;
            r(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) / d;
            r(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / d;
        }
        return r;
    }
};

/// Number of independent components of a symmetric DxD matrix.
constexpr int sym_components(int d) { return d * (d + 1) / 2; }

namespace detail {
// Component order: diagonal first, then off-diagonals row by row.
// D=2: (0,0) (1,1) (0,1).  D=3: (0,0) (1,1) (2,2) (0,1) (0,2) (1,2).
template <int D>
constexpr int sym_index(int i, int j) {
    if (i == j) return i;
    int lo = i < j ? i : j;
    int hi = i < j ? j : i;
    if constexpr (D == 2) {
        (void)lo; (void)hi;
        return 2;
    } else {
        if (lo == 0 && hi == 1) return 3;
        if (lo == 0 && hi == 2) return 4;
        return 5;
    }
}
} // namespace detail

/// Symmetric DxD matrix stored as its upper triangle.
template <int D>
struct SymMat {
    static constexpr int NC = sym_components(D);
    std::array<double, NC> c{};

    static SymMat identity() {
        SymMat s;
        for (int i = 0; i < D; ++i) s.c[i] = 1.0;
        return s;
    }

    double& at(int i, int j) { return c[detail::sym_index<D>(i, j)]; }
    double at(int i, int j) const { return c[detail::sym_index<D>(i, j)]; }

    double trace() const {
        double t = 0;
        for (int i = 0; i < D; ++i) t += c[i];
        return t;
    }

    SymMat& operator+=(const SymMat& o) {
        for (int k = 0; k < NC; ++k) c[k] += o.c[k];
        return *this;
    }
    SymMat& operator-=(const SymMat& o) {
        for (int k = 0; k < NC; ++k) c[k] -= o.c[k];
        return *this;
    }
    SymMat& operator*=(double s) {
        for (int k = 0; k < NC; ++k) c[k] *= s;
        return *this;
    }
    friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
    friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
    friend SymMat operator*(double s, SymMat a) { return a *= s; }

    Vec<D> apply(const Vec<D>& x) const {
        Vec<D> y;
        for (int i = 0; i < D; ++i) {
            double s = 0;
            for (int j = 0; j < D; ++j) s += at(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    Mat<D> full() const {
        Mat<D> m;
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) m(i, j) = at(i, j);
        return m;
    }

    /// Frobenius inner product with another symmetric matrix.
    double ddot(const SymMat& o) const {
        double s = 0;
        for (int i = 0; i < D; ++i) s += c[i] * o.c[i];
        for (int k = D; k < NC; ++k) s += 2.0 * c[k] * o.c[k];
        return s;
    }
    double frobenius_sq() const { return ddot(*this); }

    /// Contraction with a general matrix: sum_ij S_ij G_ij.
    double ddot_full(const Mat<D>& g) const {
        double s = 0;
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) s += at(i, j) * g(i, j);
        return s;
    }

    /// Symmetric part of G*S + S*G^T for a general matrix G.
    static SymMat upper_convected(const Mat<D>& g, const SymMat& s) {
        SymMat r;
        for (int i = 0; i < D; ++i)
            for (int j = i; j < D; ++j) {
                double acc = 0;
                for (int k = 0; k < D; ++k)
                    acc += g(i, k) * s.at(k, j) + s.at(i, k) * g(j, k);
                r.at(i, j) = acc;
            }
        return r;
    }

    /// Smallest eigenvalue by closed form (quadratic for D=2, trigonometric
    /// solution of the characteristic cubic for D=3).
    double min_eigenvalue() const {
        if constexpr (D == 2) {
            double tr = c[0] + c[1];
            double det = c[0] * c[1] - c[2] * c[2];
            double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
            return tr / 2.0 - disc;
        } else {
            double a = c[0], b = c[1], cc = c[2];
            double d = c[3], e = c[4], f = c[5];
            double p1 = d * d + e * e + f * f;
            if (p1 < 1e-300) return std::min(a, std::min(b, cc));
            double q = (a + b + cc) / 3.0;
            double p2 = (a - q) * (a - q) + (b - q) * (b - q) + (cc - q) * (cc - q) + 2.0 * p1;
            double p = std::sqrt(p2 / 6.0);
            // r = det((S - qI)/p) / 2, clamped into [-1,1] for acos
            double m00 = (a - q) / p, m11 = (b - q) / p, m22 = (cc - q) / p;
            double m01 = d / p, m02 = e / p, m12 = f / p;
            double r = 0.5 * (m00 * (m11 * m22 - m12 * m12) - m01 * (m01 * m22 - m12 * m02)
                              + m02 * (m01 * m12 - m11 * m02));
            r = std::max(-1.0, std::min(1.0, r));
            double phi = std::acos(r) / 3.0;
            // eigenvalues are q + 2p cos(phi + 2k pi/3); the smallest uses k=1 shift
            return q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
        }
    }
};

/// outer(u, v) + outer(v, u) symmetrized is not needed; plain outer product
/// of a vector with itself is.
template <int D>
inline SymMat<D> outer_self(const Vec<D>& q) {
    SymMat<D> s;
    for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j) s.at(i, j) = q[i] * q[j];
    return s;
}

} // namespace pfsi
