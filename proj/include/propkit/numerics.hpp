#pragma once

// Shared numerical kernels: adaptive Gauss-Kronrod quadrature, an embedded
// Dormand-Prince RK pair with dense output, natural cubic splines with exact
// antiderivatives, polynomial extrapolation, sequence acceleration and
// Durand-Kerner root finding. Everything is deterministic: no global state,
// no randomness, fixed evaluation orders.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "propkit/errors.hpp"

namespace propkit::num {

using cplx = std::complex<double>;

inline double norm_of(double v) { return std::abs(v); }
inline double norm_of(const cplx& v) { return std::abs(v); }

// (e^z - 1)/z, stable near z = 0. Series branch keeps relative error at
// machine level where direct evaluation cancels.
inline cplx phi1_scalar(cplx z) {
    if (std::abs(z) < 0.05) {
        cplx acc(1.0, 0.0);
        cplx term(1.0, 0.0);
        for (int k = 2; k <= 10; ++k) {
            term *= z / static_cast<double>(k);
            acc += term;
        }
        return acc;
    }
    return (std::exp(z) - 1.0) / z;
}

inline double phi1_scalar(double z) {
    if (std::abs(z) < 1e-12) return 1.0 + 0.5 * z;
    return std::expm1(z) / z;
}

template <typename T>
struct IntegralResult {
    T value{};
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// 15-point Kronrod extension of 7-point Gauss (positive abscissae).
inline constexpr std::array<double, 8> gk_x = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk_wk = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk_wg = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
auto gk15(F& f, double a, double b, double& err)
    -> decltype(f(a)) {
    using T = decltype(f(a));
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    T fc = f(c);
    T kron = fc * gk_wk[7];
    T gauss = fc * gk_wg[3];
    for (int i = 0; i < 7; ++i) {
        T fl = f(c - h * gk_x[i]);
        T fr = f(c + h * gk_x[i]);
        T s = fl + fr;
        kron += s * gk_wk[i];
        if (i % 2 == 1) gauss += s * gk_wg[i / 2];
    }
    kron = kron * h;
    gauss = gauss * h;
    err = norm_of(kron - gauss);
    // QUADPACK-style sharpening of the raw difference.
    err = std::pow(200.0 * err, 1.5);
    double scale = norm_of(kron);
    if (scale > 0.0 && err > scale) err = scale;
    return kron;
}

} // namespace detail

// Globally adaptive Gauss-Kronrod integration of f over [a, b]. The interval
// with the largest error estimate is bisected until the sum of estimates
// meets max(abs_tol, rel_tol * |I|) or the interval budget is exhausted.
template <typename F>
auto integrate_adaptive(F&& f, double a, double b, double abs_tol,
                        double rel_tol, int max_intervals = 4000)
    -> IntegralResult<decltype(f(a))> {
    using T = decltype(f(a));
    struct Seg {
        double a, b, err;
        T val;
    };
    IntegralResult<T> out;
    if (a == b) return out;

    std::vector<Seg> segs;
    double err0;
    T v0 = detail::gk15(f, a, b, err0);
    segs.push_back({a, b, err0, v0});
    out.evaluations = 15;

    auto total_err = [&] {
        double e = 0.0;
        for (const auto& s : segs) e += s.err;
        return e;
    };
    auto total_val = [&] {
        T v = segs[0].val;
        for (std::size_t i = 1; i < segs.size(); ++i) v += segs[i].val;
        return v;
    };

    while (true) {
        double etot = total_err();
        T vtot = total_val();
        double goal = std::max(abs_tol, rel_tol * norm_of(vtot));
        if (etot <= goal) {
            out.value = vtot;
            out.error_estimate = etot;
            return out;
        }
        if (static_cast<int>(segs.size()) >= max_intervals) {
            throw NumericalFailure(
                "adaptive quadrature did not converge: achieved error " +
                std::to_string(etot) + " with " + std::to_string(segs.size()) +
                " intervals, requested " + std::to_string(goal));
        }
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Seg s = segs[worst];
        double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b) {
            throw NumericalFailure(
                "adaptive quadrature stalled on an interval at machine "
                "resolution; achieved error " + std::to_string(etot));
        }
        double el, er;
        T vl = detail::gk15(f, s.a, mid, el);
        T vr = detail::gk15(f, mid, s.b, er);
        out.evaluations += 30;
        segs[worst] = {s.a, mid, el, vl};
        segs.push_back({mid, s.b, er, vr});
    }
}

// Fixed 8-point Gauss-Legendre rule on [a, b]; used for prefix tables where
// panel widths are chosen small enough that adaptivity is unnecessary.
template <typename F>
auto gauss8(F&& f, double a, double b) -> decltype(f(a)) {
    static constexpr std::array<double, 4> x = {
        0.183434642495649804939476142360184,
        0.525532409916328985817739049189246,
        0.796666477413626739591553936475830,
        0.960289856497536231683560868569473};
    static constexpr std::array<double, 4> w = {
        0.362683783378361982965150449277196,
        0.313706645877887287337962201986601,
        0.222381034453374470544355994426241,
        0.101228536290376259152531354309962};
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    using T = decltype(f(a));
    T acc = (f(c - h * x[0]) + f(c + h * x[0])) * w[0];
    for (int i = 1; i < 4; ++i) acc += (f(c - h * x[i]) + f(c + h * x[i])) * w[i];
    return acc * h;
}

// Cumulative integral of a scalar (complex) integrand on [0, tau]: panelized
// prefix sums plus a partial-panel Gauss rule, so eval(s) costs O(8) integrand
// calls after construction.
class PrefixIntegral {
public:
    PrefixIntegral() = default;
    PrefixIntegral(std::function<cplx(double)> g, double tau, int panels);

    cplx eval(double s) const;
    cplx total() const { return prefix_.back(); }
    double tau() const { return tau_; }

private:
    std::function<cplx(double)> g_;
    double tau_ = 0.0;
    double dx_ = 0.0;
    std::vector<cplx> prefix_;
};

// Dense solution of an ODE system produced by the adaptive RK integrator:
// stored accepted steps with derivatives, cubic Hermite interpolation in
// between.
template <std::size_t N>
class OdeSolution {
public:
    std::vector<double> t;
    std::vector<std::array<double, N>> y;
    std::vector<std::array<double, N>> f;

    std::array<double, N> eval(double ti) const {
        if (t.empty()) throw NumericalFailure("empty ODE solution");
        if (ti <= t.front()) return y.front();
        if (ti >= t.back()) return y.back();
        std::size_t lo = 0, hi = t.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (t[mid] <= ti) lo = mid; else hi = mid;
        }
        const double h = t[hi] - t[lo];
        const double s = (ti - t[lo]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        std::array<double, N> out;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = h00 * y[lo][i] + h10 * h * f[lo][i] + h01 * y[hi][i] +
                     h11 * h * f[hi][i];
        return out;
    }
};

// Adaptive Dormand-Prince 5(4) integrator. rhs(t, y, dydt). Returns the dense
// solution over [t0, t1] (t1 > t0).
template <std::size_t N, typename RHS>
OdeSolution<N> integrate_ode(RHS&& rhs, std::array<double, N> y0, double t0,
                             double t1, double rel_tol, double abs_tol,
                             std::size_t max_steps = 100000) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    OdeSolution<N> sol;
    std::array<double, N> y = y0, k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{},
                          tmp{}, ynew{};
    double t = t0;
    rhs(t, y, k1);
    sol.t.push_back(t);
    sol.y.push_back(y);
    sol.f.push_back(k1);

    double h = (t1 - t0) * 1e-2;
    const double hmin = (t1 - t0) * 1e-14;
    std::size_t steps = 0;
    while (t < t1) {
        if (++steps > max_steps)
            throw NumericalFailure("ODE integrator exceeded step budget");
        if (t + h > t1) h = t1 - t;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                                 a54 * k4[i]);
        rhs(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                 a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                  b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                             e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double sc = abs_tol + rel_tol * std::max(std::abs(y[i]),
                                                     std::abs(ynew[i]));
            double r = ei / sc;
            err += r * r;
        }
        err = std::sqrt(err / N);

        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;
            sol.t.push_back(t);
            sol.y.push_back(y);
            sol.f.push_back(k1);
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::min(5.0, std::max(0.2, fac));
        h *= fac;
        if (h < hmin)
            throw NumericalFailure("ODE integrator step size underflow");
    }
    return sol;
}

// Natural cubic spline through (x_i, y_i), strictly increasing x. Provides
// value, derivative and the exact antiderivative of the interpolant.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> xs, std::vector<double> ys);

    double eval(double x) const;
    double derivative(double x) const;
    // integral of the spline from x_front to x
    double antiderivative(double x) const;
    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }
    bool in_range(double x) const { return x >= xs_.front() && x <= xs_.back(); }

private:
    std::size_t locate(double x) const;
    std::vector<double> xs_, ys_, m_;     // m_: second derivatives
    std::vector<double> iprefix_;         // antiderivative at knots
};

// Neville polynomial extrapolation of (x_i, y_i) to x = 0. Returns the
// extrapolated value; err receives the magnitude of the last correction.
cplx neville_at_zero(const std::vector<double>& xs, const std::vector<cplx>& ys,
                     double& err);

// Iterated-averaging acceleration for the partial sums of an eventually
// alternating/oscillating series. Returns the accelerated limit; err receives
// the final spread.
cplx accelerate_oscillatory(std::vector<cplx> partial, double& err);

// Durand-Kerner roots of a monic polynomial with complex coefficients
// (c[0] + c[1] z + ... + c[n-1] z^{n-1} + z^n).
std::vector<cplx> polynomial_roots(std::vector<cplx> coeffs_monic);

} // namespace propkit::num
