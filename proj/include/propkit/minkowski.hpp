#pragma once

// Minkowski four-vectors (metric +,-,-,-), dense complex 4x4 matrices and the
// analytic matrix functions needed by the worldline kernels: phi1(X) =
// (e^X - 1) X^{-1} as its everywhere-defined power series, the squared
// inverse sinhc h(X) = X^2 sinh^{-2}(X), the boundary-value path ratio built
// from phi1, and branch-tracked square roots of determinants.
//
// Matrix functions are evaluated by scaling + series + exact doubling rules,
// never by eigendecomposition: the field tensors of interest include
// non-diagonalizable (nilpotent) cases. Eigenvalues appear only in error
// diagnostics.

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "propkit/errors.hpp"

namespace propkit {

using cplx = std::complex<double>;

struct FieldTensor; // fields.hpp

struct FourVector {
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};

    FourVector() = default;
    FourVector(double c0, double c1, double c2, double c3) : c{c0, c1, c2, c3} {}

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }

    FourVector operator+(const FourVector& o) const {
        return {c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2], c[3] + o.c[3]};
    }
    FourVector operator-(const FourVector& o) const {
        return {c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2], c[3] - o.c[3]};
    }
    FourVector operator*(double s) const {
        return {c[0] * s, c[1] * s, c[2] * s, c[3] * s};
    }
    FourVector& operator+=(const FourVector& o) {
        for (int i = 0; i < 4; ++i) c[i] += o.c[i];
        return *this;
    }
    bool finite() const;
};

inline FourVector operator*(double s, const FourVector& v) { return v * s; }

// Minkowski inner product a^mu g_{mu nu} b^nu.
inline double dot(const FourVector& a, const FourVector& b) {
    return a.c[0] * b.c[0] - a.c[1] * b.c[1] - a.c[2] * b.c[2] - a.c[3] * b.c[3];
}

// Euclidean norm of the components; used for error metrics, not physics.
double euclid_norm(const FourVector& v);

inline double norm_of(const FourVector& v) { return euclid_norm(v); }

// Complex-component four-vector (light-cone projections, FD intermediates).
struct CFourVector {
    std::array<cplx, 4> c{};
    CFourVector() = default;
    CFourVector(cplx c0, cplx c1, cplx c2, cplx c3) : c{c0, c1, c2, c3} {}
    explicit CFourVector(const FourVector& v)
        : c{cplx(v[0], 0), cplx(v[1], 0), cplx(v[2], 0), cplx(v[3], 0)} {}
    cplx& operator[](int i) { return c[i]; }
    cplx operator[](int i) const { return c[i]; }
    CFourVector operator+(const CFourVector& o) const {
        return {c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2], c[3] + o.c[3]};
    }
    CFourVector operator-(const CFourVector& o) const {
        return {c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2], c[3] - o.c[3]};
    }
    CFourVector operator*(cplx s) const {
        return {c[0] * s, c[1] * s, c[2] * s, c[3] * s};
    }
    FourVector real() const {
        return {c[0].real(), c[1].real(), c[2].real(), c[3].real()};
    }
    double max_imag() const;
};

inline cplx dot(const CFourVector& a, const CFourVector& b) {
    return a.c[0] * b.c[0] - a.c[1] * b.c[1] - a.c[2] * b.c[2] - a.c[3] * b.c[3];
}
inline cplx dot(const FourVector& a, const CFourVector& b) {
    return b.c[0] * a.c[0] - b.c[1] * a.c[1] - b.c[2] * a.c[2] - b.c[3] * a.c[3];
}

// Row-major complex 4x4 matrix. is_real is a tracked invariant: when set, all
// imaginary parts are exactly zero.
struct Matrix4 {
    std::array<cplx, 16> m{};
    bool is_real = true;

    static Matrix4 identity();
    static Matrix4 zero();
    static Matrix4 diag(cplx a, cplx b, cplx c, cplx d);
    static Matrix4 minkowski_metric(); // diag(1,-1,-1,-1)
    static Matrix4 from_real(const std::array<double, 16>& r);

    cplx& operator()(int r, int c) { return m[4 * r + c]; }
    const cplx& operator()(int r, int c) const { return m[4 * r + c]; }

    Matrix4 operator+(const Matrix4& o) const;
    Matrix4 operator-(const Matrix4& o) const;
    Matrix4 operator*(const Matrix4& o) const;
    Matrix4 operator*(cplx s) const;
    Matrix4 operator*(double s) const;
    Matrix4 transpose() const;

    CFourVector apply(const CFourVector& v) const;
    CFourVector apply(const FourVector& v) const;
    // Application that asserts a real result (used by real closed forms).
    FourVector apply_real(const FourVector& v) const;

    double norm_inf() const;     // max row sum of |entries|
    double max_abs() const;
    cplx trace() const;
    cplx det() const;
    Matrix4 inverse() const;     // throws NumericalFailure when singular
    bool solve(CFourVector& rhs) const; // in place; false when singular
};

// Principal-branch square root with winding bookkeeping. branch_index counts
// signed crossings of the negative real axis accumulated through a
// continuity chain; value always satisfies value^2 = det.
struct BranchedSqrt {
    cplx value{0.0, 0.0};
    int branch_index = 0;
};

// Raise the first index of a covariant antisymmetric field tensor:
// (F^mu_nu) = g^{mu rho} F_{rho nu}. Result trace is exactly zero.
Matrix4 mixed_tensor(const FieldTensor& F);

// phi1(X) = sum_{n>=0} X^n/(n+1)!  == (e^X - 1) X^{-1} for invertible X.
// Evaluated by scaled series plus the doubling rule
// phi1(2X) = phi1(X) (I + e^X)/2, with e^X carried along exactly.
Matrix4 phi1(const Matrix4& X, double tol = 1e-12);

// e^X via I + X phi1(X).
Matrix4 expm(const Matrix4& X, double tol = 1e-12);

// R(sigma) = [sigma phi1(lambda F sigma)] [tau phi1(lambda F tau)]^{-1}
// for the mixed tensor F; the boundary-value ratio of a constant field.
// Throws NumericalFailure when lambda*F*tau sits on a resonance (an
// eigenvalue of lambda F tau equal to 2 pi i k, k != 0), naming the
// eigenvalue.
Matrix4 path_ratio(const FieldTensor& F, double lambda, double sigma,
                   double tau);

// h(X) = X^2 sinh^{-2}(X): even series in X^2 scaled with the doubling rule
// h(2X) = h(X) cosh(X)^{-2}. Throws NumericalFailure at caustics (an
// eigenvalue of X equal to i pi k, k != 0).
Matrix4 sinhc_inv_sq(const Matrix4& X, double tol = 1e-12);

// Square root of det(M) with the branch chosen by continuity against
// `reference` (the previous point of a parameter sweep). Without a reference
// the principal branch is used, which gives the positive real root for the
// positive real determinants of the free-field limit.
BranchedSqrt det_sqrt_continuous(const Matrix4& M,
                                 const std::optional<BranchedSqrt>& reference);

// Continuity step for a bare complex value (same convention as above, without
// recomputing a determinant).
BranchedSqrt sqrt_continuous(cplx value_squared,
                             const std::optional<BranchedSqrt>& reference);

// Eigenvalues via characteristic polynomial (Faddeev-LeVerrier) and
// Durand-Kerner iteration. Diagnostic quality only.
std::array<cplx, 4> eigenvalues4(const Matrix4& A);

} // namespace propkit
