#include "propkit/minkowski.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "propkit/fields.hpp"
#include "propkit/numerics.hpp"

namespace propkit {

bool FourVector::finite() const {
    return std::isfinite(c[0]) && std::isfinite(c[1]) && std::isfinite(c[2]) &&
           std::isfinite(c[3]);
}

double euclid_norm(const FourVector& v) {
    return std::sqrt(v.c[0] * v.c[0] + v.c[1] * v.c[1] + v.c[2] * v.c[2] +
                     v.c[3] * v.c[3]);
}

double CFourVector::max_imag() const {
    double m = 0.0;
    for (const auto& z : c) m = std::max(m, std::abs(z.imag()));
    return m;
}

Matrix4 Matrix4::identity() {
    Matrix4 r;
    for (int i = 0; i < 4; ++i) r(i, i) = 1.0;
    return r;
}

Matrix4 Matrix4::zero() { return Matrix4{}; }

Matrix4 Matrix4::diag(cplx a, cplx b, cplx c, cplx d) {
    Matrix4 r;
    r(0, 0) = a;
    r(1, 1) = b;
    r(2, 2) = c;
    r(3, 3) = d;
    r.is_real = a.imag() == 0 && b.imag() == 0 && c.imag() == 0 && d.imag() == 0;
    return r;
}

Matrix4 Matrix4::minkowski_metric() { return diag(1.0, -1.0, -1.0, -1.0); }

Matrix4 Matrix4::from_real(const std::array<double, 16>& r) {
    Matrix4 out;
    for (int i = 0; i < 16; ++i) out.m[i] = cplx(r[i], 0.0);
    out.is_real = true;
    return out;
}

Matrix4 Matrix4::operator+(const Matrix4& o) const {
    Matrix4 r;
    for (int i = 0; i < 16; ++i) r.m[i] = m[i] + o.m[i];
    r.is_real = is_real && o.is_real;
    return r;
}

Matrix4 Matrix4::operator-(const Matrix4& o) const {
    Matrix4 r;
    for (int i = 0; i < 16; ++i) r.m[i] = m[i] - o.m[i];
    r.is_real = is_real && o.is_real;
    return r;
}

Matrix4 Matrix4::operator*(const Matrix4& o) const {
    Matrix4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            cplx acc(0.0, 0.0);
            for (int k = 0; k < 4; ++k) acc += (*this)(i, k) * o(k, j);
            r(i, j) = acc;
        }
    r.is_real = is_real && o.is_real;
    return r;
}

Matrix4 Matrix4::operator*(cplx s) const {
    Matrix4 r;
    for (int i = 0; i < 16; ++i) r.m[i] = m[i] * s;
    r.is_real = is_real && s.imag() == 0.0;
    return r;
}

Matrix4 Matrix4::operator*(double s) const { return (*this) * cplx(s, 0.0); }

Matrix4 Matrix4::transpose() const {
    Matrix4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = (*this)(j, i);
    r.is_real = is_real;
    return r;
}

CFourVector Matrix4::apply(const CFourVector& v) const {
    CFourVector r;
    for (int i = 0; i < 4; ++i) {
        cplx acc(0.0, 0.0);
        for (int k = 0; k < 4; ++k) acc += (*this)(i, k) * v[k];
        r[i] = acc;
    }
    return r;
}

CFourVector Matrix4::apply(const FourVector& v) const {
    return apply(CFourVector(v));
}

FourVector Matrix4::apply_real(const FourVector& v) const {
    CFourVector r = apply(v);
    return r.real();
}

double Matrix4::norm_inf() const {
    double best = 0.0;
    for (int i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int j = 0; j < 4; ++j) row += std::abs((*this)(i, j));
        best = std::max(best, row);
    }
    return best;
}

double Matrix4::max_abs() const {
    double best = 0.0;
    for (const auto& z : m) best = std::max(best, std::abs(z));
    return best;
}

cplx Matrix4::trace() const { return m[0] + m[5] + m[10] + m[15]; }

namespace {

// LU with partial pivoting; returns false when a pivot underflows relative to
// the matrix scale.
bool lu_factor(std::array<cplx, 16>& a, std::array<int, 4>& piv, int& sign,
               double scale) {
    sign = 1;
    const double tiny = std::max(scale, 1e-300) * 1e-15;
    for (int col = 0; col < 4; ++col) {
        int best = col;
        double bestmag = std::abs(a[4 * col + col]);
        for (int r = col + 1; r < 4; ++r) {
            double mag = std::abs(a[4 * r + col]);
            if (mag > bestmag) {
                bestmag = mag;
                best = r;
            }
        }
        piv[col] = best;
        if (best != col) {
            for (int j = 0; j < 4; ++j)
                std::swap(a[4 * best + j], a[4 * col + j]);
            sign = -sign;
        }
        if (std::abs(a[4 * col + col]) <= tiny) return false;
        for (int r = col + 1; r < 4; ++r) {
            cplx f = a[4 * r + col] / a[4 * col + col];
            a[4 * r + col] = f;
            for (int j = col + 1; j < 4; ++j) a[4 * r + j] -= f * a[4 * col + j];
        }
    }
    return true;
}

void lu_solve(const std::array<cplx, 16>& lu, const std::array<int, 4>& piv,
              std::array<cplx, 4>& b) {
    for (int i = 0; i < 4; ++i)
        if (piv[i] != i) std::swap(b[i], b[piv[i]]);
    for (int i = 1; i < 4; ++i)
        for (int j = 0; j < i; ++j) b[i] -= lu[4 * i + j] * b[j];
    for (int i = 3; i >= 0; --i) {
        for (int j = i + 1; j < 4; ++j) b[i] -= lu[4 * i + j] * b[j];
        b[i] /= lu[4 * i + i];
    }
}

} // namespace

cplx Matrix4::det() const {
    std::array<cplx, 16> a = m;
    std::array<int, 4> piv{};
    int sign = 1;
    if (!lu_factor(a, piv, sign, max_abs())) return cplx(0.0, 0.0);
    cplx d(static_cast<double>(sign), 0.0);
    for (int i = 0; i < 4; ++i) d *= a[4 * i + i];
    return d;
}

Matrix4 Matrix4::inverse() const {
    std::array<cplx, 16> a = m;
    std::array<int, 4> piv{};
    int sign = 1;
    if (!lu_factor(a, piv, sign, max_abs()))
        throw NumericalFailure("singular 4x4 matrix in inverse()");
    Matrix4 r;
    for (int col = 0; col < 4; ++col) {
        std::array<cplx, 4> e{};
        e[col] = 1.0;
        lu_solve(a, piv, e);
        for (int rrow = 0; rrow < 4; ++rrow) r(rrow, col) = e[rrow];
    }
    r.is_real = is_real;
    return r;
}

bool Matrix4::solve(CFourVector& rhs) const {
    std::array<cplx, 16> a = m;
    std::array<int, 4> piv{};
    int sign = 1;
    if (!lu_factor(a, piv, sign, max_abs())) return false;
    std::array<cplx, 4> b{rhs[0], rhs[1], rhs[2], rhs[3]};
    lu_solve(a, piv, b);
    rhs = CFourVector(b[0], b[1], b[2], b[3]);
    return true;
}

Matrix4 mixed_tensor(const FieldTensor& F) {
    // g = diag(1,-1,-1,-1): raising the first index negates rows 1..3.
    Matrix4 r;
    for (int j = 0; j < 4; ++j) r(0, j) = F.cov(0, j);
    for (int i = 1; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = -F.cov(i, j);
    r.is_real = true;
    return r;
}

namespace {

int scaling_exponent(double norm, double theta) {
    if (norm <= theta) return 0;
    return static_cast<int>(std::ceil(std::log2(norm / theta)));
}

} // namespace

Matrix4 phi1(const Matrix4& X, double tol) {
    const double norm = X.norm_inf();
    if (!std::isfinite(norm))
        throw InvalidInput("phi1: non-finite matrix entries");
    const int k = scaling_exponent(norm, 0.25);
    const double scale = std::ldexp(1.0, -k);
    Matrix4 Y = X * scale;

    // phi1(Y) = sum Y^n/(n+1)!; at ||Y|| <= 0.25 the series hits machine
    // precision well inside the term cap.
    Matrix4 acc = Matrix4::identity();
    Matrix4 term = Matrix4::identity();
    double trunc = 1.0;
    for (int n = 1; n <= 30; ++n) {
        term = term * Y * (1.0 / (n + 1.0));
        acc = acc + term;
        trunc = term.norm_inf();
        if (trunc < 1e-18 * std::max(1.0, acc.norm_inf())) break;
    }

    Matrix4 E = Matrix4::identity() + Y * acc; // e^Y, exact companion
    Matrix4 P = acc;
    for (int j = 0; j < k; ++j) {
        P = P * (Matrix4::identity() + E) * 0.5;
        E = E * E;
    }

    const double eps = 2.2e-16;
    double achieved = trunc + (k + 2.0) * eps * std::max(1.0, P.norm_inf());
    if (achieved > tol && tol > 0.0) {
        std::ostringstream os;
        os << "phi1: requested tolerance " << tol
           << " not attainable; achieved residual estimate " << achieved;
        throw NumericalFailure(os.str());
    }
    return P;
}

Matrix4 expm(const Matrix4& X, double tol) {
    return Matrix4::identity() + X * phi1(X, tol);
}

Matrix4 path_ratio(const FieldTensor& F, double lambda, double sigma,
                   double tau) {
    if (!(tau > 0.0)) throw InvalidInput("path_ratio: tau must be positive");
    Matrix4 A = mixed_tensor(F) * lambda;
    Matrix4 num = phi1(A * sigma) * sigma;
    Matrix4 den = phi1(A * tau) * tau;

    std::array<cplx, 16> lu = den.m;
    std::array<int, 4> piv{};
    int sign = 1;
    if (!lu_factor(lu, piv, sign, den.max_abs())) {
        // Resonance: some eigenvalue of lambda F tau equals 2 pi i k, k != 0.
        auto eigs = eigenvalues4(A * tau);
        cplx offender = eigs[0];
        double best = 1e300;
        for (const auto& ev : eigs) {
            double kk = std::round(ev.imag() / (2.0 * M_PI));
            if (kk == 0.0) continue;
            double d = std::abs(ev - cplx(0.0, 2.0 * M_PI * kk));
            if (d < best) {
                best = d;
                offender = ev;
            }
        }
        std::ostringstream os;
        os << "path_ratio: resonant boundary-value problem, eigenvalue of "
              "lambda*F*tau near a nonzero multiple of 2*pi*i: ("
           << offender.real() << ", " << offender.imag() << ")";
        throw NumericalFailure(os.str());
    }
    // R = num * den^{-1): solve den^T z = num^T row-wise.
    Matrix4 denT_lu_src = den.transpose();
    std::array<cplx, 16> luT = denT_lu_src.m;
    std::array<int, 4> pivT{};
    if (!lu_factor(luT, pivT, sign, denT_lu_src.max_abs()))
        throw NumericalFailure("path_ratio: singular denominator");
    Matrix4 R;
    for (int i = 0; i < 4; ++i) {
        std::array<cplx, 4> row{num(i, 0), num(i, 1), num(i, 2), num(i, 3)};
        lu_solve(luT, pivT, row);
        for (int j = 0; j < 4; ++j) R(i, j) = row[j];
    }
    R.is_real = num.is_real && den.is_real;
    return R;
}

namespace {

// Coefficients of h(y) = (y/sinh y)^2 as a series in u = y^2, generated from
// the inverse of sinh(y)/y = sum u^n/(2n+1)!.
const std::vector<double>& sinhc_inv_sq_coeffs() {
    static const std::vector<double> coeffs = [] {
        const int N = 16;
        std::vector<double> s(N + 1), t(N + 1, 0.0), c(N + 1, 0.0);
        double fact = 1.0;
        for (int n = 0; n <= N; ++n) {
            // (2n+1)! built incrementally
            if (n > 0) fact *= (2.0 * n) * (2.0 * n + 1.0);
            s[n] = 1.0 / fact;
        }
        t[0] = 1.0;
        for (int n = 1; n <= N; ++n) {
            double acc = 0.0;
            for (int j = 1; j <= n; ++j) acc += s[j] * t[n - j];
            t[n] = -acc;
        }
        for (int n = 0; n <= N; ++n) {
            double acc = 0.0;
            for (int j = 0; j <= n; ++j) acc += t[j] * t[n - j];
            c[n] = acc;
        }
        return c;
    }();
    return coeffs;
}

Matrix4 cosh_series(const Matrix4& Y2) {
    // cosh(Y) = sum (Y^2)^n / (2n)!, ||Y|| <= 0.7 assumed
    Matrix4 acc = Matrix4::identity();
    Matrix4 term = Matrix4::identity();
    double fact = 1.0;
    for (int n = 1; n <= 14; ++n) {
        fact *= (2.0 * n - 1.0) * (2.0 * n);
        term = term * Y2;
        acc = acc + term * (1.0 / fact);
        if (term.norm_inf() / fact < 1e-18) break;
    }
    return acc;
}

} // namespace

Matrix4 sinhc_inv_sq(const Matrix4& X, double tol) {
    const double norm = X.norm_inf();
    if (!std::isfinite(norm))
        throw InvalidInput("sinhc_inv_sq: non-finite matrix entries");
    const int k = scaling_exponent(norm, 0.7);
    const double scale = std::ldexp(1.0, -k);
    Matrix4 Y = X * scale;
    Matrix4 Y2 = Y * Y;

    const auto& coef = sinhc_inv_sq_coeffs();
    Matrix4 acc = Matrix4::identity() * coef[0];
    Matrix4 term = Matrix4::identity();
    double trunc = 0.0;
    for (std::size_t n = 1; n < coef.size(); ++n) {
        term = term * Y2;
        acc = acc + term * coef[n];
        trunc = term.norm_inf() * std::abs(coef[n]);
        if (trunc < 1e-18 * std::max(1.0, acc.norm_inf())) break;
    }

    Matrix4 H = acc;
    Matrix4 C = cosh_series(Y2);
    for (int j = 0; j < k; ++j) {
        // h(2Y) = h(Y) cosh(Y)^{-2}; cosh doubles as cosh(2Y) = 2 cosh^2 - I.
        std::array<cplx, 16> lu = C.m;
        std::array<int, 4> piv{};
        int sign = 1;
        if (!lu_factor(lu, piv, sign, C.max_abs())) {
            auto eigs = eigenvalues4(X);
            cplx offender = eigs[0];
            double best = 1e300;
            for (const auto& ev : eigs) {
                double kk = std::round(ev.imag() / M_PI);
                if (kk == 0.0) continue;
                double d = std::abs(ev - cplx(0.0, M_PI * kk));
                if (d < best) {
                    best = d;
                    offender = ev;
                }
            }
            std::ostringstream os;
            os << "sinhc_inv_sq: sinh singularity (caustic); eigenvalue of X "
                  "near a nonzero multiple of i*pi: ("
               << offender.real() << ", " << offender.imag() << ")";
            throw NumericalFailure(os.str());
        }
        Matrix4 Cinv;
        for (int col = 0; col < 4; ++col) {
            std::array<cplx, 4> e{};
            e[col] = 1.0;
            lu_solve(lu, piv, e);
            for (int r = 0; r < 4; ++r) Cinv(r, col) = e[r];
        }
        Cinv.is_real = C.is_real;
        H = H * Cinv * Cinv;
        C = C * C * 2.0 - Matrix4::identity();
    }

    const double eps = 2.2e-16;
    double achieved = trunc + (k + 2.0) * eps * std::max(1.0, H.norm_inf());
    if (achieved > tol && tol > 0.0) {
        std::ostringstream os;
        os << "sinhc_inv_sq: requested tolerance " << tol
           << " not attainable; achieved residual estimate " << achieved;
        throw NumericalFailure(os.str());
    }
    return H;
}

BranchedSqrt sqrt_continuous(cplx value_squared,
                             const std::optional<BranchedSqrt>& reference) {
    const double mag = std::abs(value_squared);
    if (mag < 1e-280)
        throw NumericalFailure(
            "det sqrt: determinant underflow, branch untrackable");
    if (mag > 1e280)
        throw NumericalFailure("det sqrt: determinant overflow");

    cplx w = std::sqrt(value_squared);
    if (!reference) return BranchedSqrt{w, 0};

    auto wrap = [](double a) {
        while (a > M_PI) a -= 2.0 * M_PI;
        while (a <= -M_PI) a += 2.0 * M_PI;
        return a;
    };
    const double ref_arg = std::arg(reference->value);
    const double ref_cont = ref_arg + 2.0 * M_PI * reference->branch_index;

    BranchedSqrt best;
    double best_step = 1e300;
    for (int s = 0; s < 2; ++s) {
        cplx cand = (s == 0) ? w : -w;
        double step = wrap(std::arg(cand) - ref_arg);
        if (std::abs(step) < best_step) {
            best_step = std::abs(step);
            double cont = ref_cont + step;
            int branch =
                static_cast<int>(std::lround((cont - std::arg(cand)) /
                                             (2.0 * M_PI)));
            best = BranchedSqrt{cand, branch};
        }
    }
    return best;
}

BranchedSqrt det_sqrt_continuous(
    const Matrix4& M, const std::optional<BranchedSqrt>& reference) {
    return sqrt_continuous(M.det(), reference);
}

std::array<cplx, 4> eigenvalues4(const Matrix4& A) {
    // Faddeev-LeVerrier: char poly z^4 + c1 z^3 + c2 z^2 + c3 z + c4.
    Matrix4 B = Matrix4::identity();
    std::array<cplx, 4> c{};
    for (int k = 1; k <= 4; ++k) {
        Matrix4 MB = A * B;
        cplx ck = -MB.trace() / static_cast<double>(k);
        c[k - 1] = ck;
        B = MB + Matrix4::identity() * ck;
    }
    std::vector<cplx> monic{c[3], c[2], c[1], c[0]}; // constant..z^3
    auto roots = num::polynomial_roots(monic);
    std::array<cplx, 4> out{};
    for (int i = 0; i < 4; ++i) out[i] = roots[i];
    return out;
}

} // namespace propkit
