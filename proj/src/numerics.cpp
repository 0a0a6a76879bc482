#include "propkit/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace propkit::num {

PrefixIntegral::PrefixIntegral(std::function<cplx(double)> g, double tau,
                               int panels)
    : g_(std::move(g)), tau_(tau) {
    if (panels < 1) panels = 1;
    dx_ = tau_ / panels;
    prefix_.resize(panels + 1);
    prefix_[0] = cplx(0.0, 0.0);
    for (int j = 0; j < panels; ++j) {
        double a = j * dx_, b = (j + 1) * dx_;
        prefix_[j + 1] = prefix_[j] + gauss8(g_, a, b);
    }
}

cplx PrefixIntegral::eval(double s) const {
    if (prefix_.empty()) return cplx(0.0, 0.0);
    if (s <= 0.0) return cplx(0.0, 0.0);
    if (s >= tau_) return prefix_.back();
    auto j = static_cast<std::size_t>(s / dx_);
    if (j >= prefix_.size() - 1) j = prefix_.size() - 2;
    double a = static_cast<double>(j) * dx_;
    return prefix_[j] + gauss8(g_, a, s);
}

CubicSpline::CubicSpline(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    const std::size_t n = xs_.size();
    if (n < 3 || ys_.size() != n)
        throw InvalidInput("cubic spline needs at least 3 matching samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(xs_[i] > xs_[i - 1]))
            throw InvalidInput("cubic spline abscissae must strictly increase");

    // Natural spline: tridiagonal solve for second derivatives.
    m_.assign(n, 0.0);
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), sub(n, 0.0), sup(n, 0.0);
    diag[0] = diag[n - 1] = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hl = xs_[i] - xs_[i - 1];
        double hr = xs_[i + 1] - xs_[i];
        sub[i] = hl / 6.0;
        diag[i] = (hl + hr) / 3.0;
        sup[i] = hr / 6.0;
        rhs[i] = (ys_[i + 1] - ys_[i]) / hr - (ys_[i] - ys_[i - 1]) / hl;
    }
    for (std::size_t i = 1; i < n; ++i) {
        double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m_[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];

    // Exact antiderivative accumulated at knots.
    iprefix_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = xs_[i + 1] - xs_[i];
        // integral over one cubic segment in the (y, m) representation
        iprefix_[i + 1] = iprefix_[i] + 0.5 * h * (ys_[i] + ys_[i + 1]) -
                          h * h * h * (m_[i] + m_[i + 1]) / 24.0;
    }
}

std::size_t CubicSpline::locate(double x) const {
    if (!in_range(x))
        throw InvalidInput("spline evaluated outside tabulated support");
    std::size_t lo = 0, hi = xs_.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (xs_[mid] <= x) lo = mid; else hi = mid;
    }
    return lo;
}

double CubicSpline::eval(double x) const {
    std::size_t i = locate(x);
    double h = xs_[i + 1] - xs_[i];
    double A = (xs_[i + 1] - x) / h, B = (x - xs_[i]) / h;
    return A * ys_[i] + B * ys_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
    std::size_t i = locate(x);
    double h = xs_[i + 1] - xs_[i];
    double A = (xs_[i + 1] - x) / h, B = (x - xs_[i]) / h;
    return (ys_[i + 1] - ys_[i]) / h +
           ((3 * B * B - 1) * m_[i + 1] - (3 * A * A - 1) * m_[i]) * h / 6.0;
}

double CubicSpline::antiderivative(double x) const {
    std::size_t i = locate(x);
    double h = xs_[i + 1] - xs_[i];
    double A = (xs_[i + 1] - x) / h, B = (x - xs_[i]) / h;
    double a2 = A * A, a4 = a2 * a2, b2 = B * B, b4 = b2 * b2;
    // Segment integral of A y_i + B y_{i+1} + ((A^3-A) m_i + (B^3-B) m_{i+1}) h^2/6.
    double seg = h * (ys_[i] * (1.0 - a2) / 2.0 + ys_[i + 1] * b2 / 2.0 +
                      h * h / 6.0 *
                          (m_[i] * ((1.0 - a4) / 4.0 - (1.0 - a2) / 2.0) +
                           m_[i + 1] * (b4 / 4.0 - b2 / 2.0)));
    return iprefix_[i] + seg;
}

cplx neville_at_zero(const std::vector<double>& xs, const std::vector<cplx>& ys,
                     double& err) {
    const std::size_t n = xs.size();
    if (n == 0 || ys.size() != n)
        throw InvalidInput("extrapolation needs matching nonempty samples");
    std::vector<cplx> p = ys;
    cplx prev = p[0];
    for (std::size_t level = 1; level < n; ++level) {
        for (std::size_t i = 0; i + level < n; ++i) {
            double xi = xs[i], xj = xs[i + level];
            p[i] = (p[i + 1] * (0.0 - xi) - p[i] * (0.0 - xj)) / (xj - xi);
        }
        prev = (level + 1 < n) ? p[0] : prev;
    }
    err = std::abs(p[0] - prev);
    return p[0];
}

cplx accelerate_oscillatory(std::vector<cplx> partial, double& err) {
    if (partial.empty())
        throw InvalidInput("acceleration of an empty sequence");
    // Repeated pairwise averaging; for asymptotically periodic block sums the
    // averages converge geometrically.
    std::vector<cplx> cur = std::move(partial);
    cplx best = cur.back();
    err = std::abs(cur.size() > 1 ? cur[cur.size() - 1] - cur[cur.size() - 2]
                                  : cur[0]);
    while (cur.size() > 1) {
        std::vector<cplx> nxt(cur.size() - 1);
        for (std::size_t i = 0; i + 1 < cur.size(); ++i)
            nxt[i] = 0.5 * (cur[i] + cur[i + 1]);
        double spread =
            nxt.size() > 1 ? std::abs(nxt.back() - nxt[nxt.size() - 2]) : err;
        if (spread <= err) {
            err = spread;
            best = nxt.back();
        }
        cur = std::move(nxt);
    }
    return best;
}

std::vector<cplx> polynomial_roots(std::vector<cplx> c) {
    const std::size_t n = c.size();
    if (n == 0) return {};
    std::vector<cplx> r(n);
    // Deterministic non-real starting spread.
    cplx seed(0.4, 0.9);
    cplx p(1.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        p *= seed;
        r[i] = p;
    }
    auto poly = [&](cplx z) {
        cplx acc(1.0, 0.0);
        for (std::size_t k = n; k-- > 0;) acc = acc * z + c[k];
        return acc;
    };
    for (int iter = 0; iter < 200; ++iter) {
        double move = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cplx denom(1.0, 0.0);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) denom *= (r[i] - r[j]);
            if (std::abs(denom) < 1e-300) denom = cplx(1e-300, 0.0);
            cplx delta = poly(r[i]) / denom;
            r[i] -= delta;
            move = std::max(move, std::abs(delta));
        }
        if (move < 1e-14) break;
    }
    return r;
}

} // namespace propkit::num
