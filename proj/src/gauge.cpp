#include "propkit/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "propkit/errors.hpp"
#include "propkit/numerics.hpp"

namespace propkit {

namespace {

// b_mu = F_{mu nu} v^nu (covariant result, plain contraction on the
// contravariant argument).
FourVector lower_apply(const FieldTensor& F, const FourVector& v) {
    FourVector b;
    for (int mu = 0; mu < 4; ++mu) {
        double s = 0.0;
        for (int nu = 0; nu < 4; ++nu) s += F.cov(mu, nu) * v[nu];
        b[mu] = s;
    }
    return b;
}

// a_mu b^mu for covariant a against contravariant b.
double comp_sum(const FourVector& a, const FourVector& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

struct FamilyStencil {
    WorldlinePath base;
    std::vector<WorldlinePath> plus, minus;
    double h = 0.0;
};

FamilyStencil build_stencil(const ClassicalPathGauge& gpath,
                            const FourVector& x) {
    if (!gpath.family)
        throw InvalidInput("classical-path gauge has no family generator");
    FamilyStencil st;
    st.base = gpath.family(x);
    const double scale = 1.0 + euclid_norm(x);
    if (euclid_norm(st.base.x_end - x) > 1e-8 * scale)
        throw InvalidInput(
            "gauge family does not end at the queried point");
    st.h = 1e-5 * scale;
    for (int mu = 0; mu < 4; ++mu) {
        FourVector xp = x, xm = x;
        xp[mu] += st.h;
        xm[mu] -= st.h;
        st.plus.push_back(gpath.family(xp));
        st.minus.push_back(gpath.family(xm));
    }
    return st;
}

// J^lam_mu(sigma) = dy^lam/dx^mu by central differences of the family.
Matrix4 family_jacobian(const FamilyStencil& st, double sigma) {
    Matrix4 J;
    J.is_real = true;
    const double inv2h = 1.0 / (2.0 * st.h);
    for (int mu = 0; mu < 4; ++mu) {
        FourVector d = (st.plus[static_cast<std::size_t>(mu)].y(sigma) -
                        st.minus[static_cast<std::size_t>(mu)].y(sigma)) *
                       inv2h;
        for (int lam = 0; lam < 4; ++lam)
            J(lam, mu) = d[lam];
    }
    return J;
}

template <typename F>
FourVector integrate_vec(F&& f, double a, double b, double tol) {
    double iscale = 0.0;
    for (int i = 0; i <= 8; ++i)
        iscale = std::max(
            iscale, euclid_norm(f(a + (b - a) * static_cast<double>(i) / 8)));
    const double len = b - a;
    const double abs_tol = std::max(tol * iscale * len * 1e-2,
                                    1e-15 * (1.0 + iscale * len));
    return num::integrate_adaptive(f, a, b, abs_tol, tol).value;
}

} // namespace

ClassicalPathGauge classical_family(const FieldConfig& config,
                                    const ParticleParams& p,
                                    const FourVector& xp, double tau) {
    return ClassicalPathGauge{[config, p, xp, tau](const FourVector& x) {
        return classical_path(config, p, x, xp, tau);
    }};
}

Curve curve_of(const WorldlinePath& path) {
    if (!path.y || !path.dy)
        throw InvalidInput("curve_of: path has no evaluators");
    Curve c;
    c.s0 = 0.0;
    c.s1 = path.tau;
    c.y = path.y;
    c.dy = path.dy;
    return c;
}

Curve curve_straight(const FourVector& x, const FourVector& xp) {
    Curve c;
    c.y = [xp, x](double s) { return xp + (x - xp) * s; };
    c.dy = [xp, x](double) { return x - xp; };
    return c;
}

Curve curve_polyline(const std::vector<FourVector>& pts) {
    if (pts.size() < 2)
        throw InvalidInput("curve_polyline: need at least 2 points");
    for (const auto& pt : pts)
        if (!pt.finite())
            throw InvalidInput("curve_polyline: points must be finite");
    const auto n = pts.size();
    Curve c;
    c.s0 = 0.0;
    c.s1 = static_cast<double>(n - 1);
    c.y = [pts, n](double s) {
        auto i = static_cast<std::size_t>(std::clamp(
            std::floor(s), 0.0, static_cast<double>(n - 2)));
        double t = s - static_cast<double>(i);
        return pts[i] + (pts[i + 1] - pts[i]) * t;
    };
    c.dy = [pts, n](double s) {
        auto i = static_cast<std::size_t>(std::clamp(
            std::floor(s), 0.0, static_cast<double>(n - 2)));
        return pts[i + 1] - pts[i];
    };
    for (std::size_t i = 1; i + 1 < n; ++i)
        c.breaks.push_back(static_cast<double>(i));
    return c;
}

Curve realize(const GaugePath& gpath, const FourVector& x) {
    if (const auto* cp = std::get_if<ClassicalPathGauge>(&gpath)) {
        if (!cp->family)
            throw InvalidInput("classical-path gauge has no family generator");
        WorldlinePath w = cp->family(x);
        if (euclid_norm(w.x_end - x) > 1e-8 * (1.0 + euclid_norm(x)))
            throw InvalidInput(
                "gauge family does not end at the queried point");
        return curve_of(w);
    }
    if (const auto* sl = std::get_if<StraightLineGauge>(&gpath))
        return curve_straight(x, sl->anchor);
    const auto& sg = std::get<SampledGauge>(gpath);
    if (sg.points.size() != sg.params.size())
        throw InvalidInput("sampled gauge: params/points size mismatch");
    for (std::size_t i = 1; i < sg.params.size(); ++i)
        if (!(sg.params[i] > sg.params[i - 1]))
            throw InvalidInput(
                "sampled gauge: params must be strictly increasing");
    Curve c = curve_polyline(sg.points);
    if (euclid_norm(c.y(c.s1) - x) > 1e-8 * (1.0 + euclid_norm(x)))
        throw InvalidInput("sampled gauge path does not end at the queried "
                           "point");
    return c;
}

FourVector potential_from_path(const FieldConfig& field,
                               const GaugePath& gpath, const FourVector& x,
                               double tol) {
    if (!x.finite())
        throw InvalidInput("potential_from_path: x must be finite");
    if (!(tol > 0.0))
        throw InvalidInput("potential_from_path: tol must be positive");

    if (const auto* sl = std::get_if<StraightLineGauge>(&gpath)) {
        const FourVector d = x - sl->anchor;
        const FourVector anchor = sl->anchor;
        auto f = [&field, anchor, d](double s) {
            return lower_apply(field_at(field, anchor + d * s), d) * (-s);
        };
        return integrate_vec(f, 0.0, 1.0, tol);
    }
    if (const auto* cp = std::get_if<ClassicalPathGauge>(&gpath)) {
        FamilyStencil st = build_stencil(*cp, x);
        auto f = [&field, &st](double sigma) {
            const FourVector y = st.base.y(sigma);
            const FourVector v = st.base.dy(sigma);
            // F_{nu lam} v^nu = -(lower_apply)_lam
            const FourVector u = lower_apply(field_at(field, y), v) * (-1.0);
            const Matrix4 J = family_jacobian(st, sigma);
            FourVector A;
            for (int mu = 0; mu < 4; ++mu) {
                double s = 0.0;
                for (int lam = 0; lam < 4; ++lam)
                    s += u[lam] * J(lam, mu).real();
                A[mu] = s;
            }
            return A;
        };
        return integrate_vec(f, 0.0, st.base.tau, tol);
    }
    throw InvalidInput(
        "sampled gauge paths define no endpoint family; potential_from_path "
        "needs a ClassicalPath or StraightLine gauge");
}

FourVector potential_classical_accel(const FieldConfig& config,
                                     const ClassicalPathGauge& gpath,
                                     const ParticleParams& p,
                                     const FourVector& x, double tol) {
    if (!(tol > 0.0))
        throw InvalidInput("potential_classical_accel: tol must be positive");
    if (p.lambda == 0.0)
        throw InvalidInput("potential_classical_accel: the acceleration form "
                           "divides by lambda; need a charged particle");
    FamilyStencil st = build_stencil(gpath, x);
    const double resid = eom_residual(st.base, config, p, 33);
    if (!(resid < 1e-6)) {
        std::ostringstream os;
        os << "path is not classical (EOM residual " << resid << ")";
        throw InvalidInput(os.str());
    }
    const double tau = st.base.tau;
    const double h0 = tau * 6.0e-6;
    const double inv_lambda = 1.0 / p.lambda;
    auto f = [&st, h0, tau, inv_lambda](double sigma) {
        const double h =
            std::max(std::min({h0, 0.5 * sigma, 0.5 * (tau - sigma)}),
                     1e-9 * tau);
        const FourVector ydd =
            (st.base.dy(sigma + h) - st.base.dy(sigma - h)) *
            (1.0 / (2.0 * h));
        const Matrix4 J = family_jacobian(st, sigma);
        FourVector A;
        for (int mu = 0; mu < 4; ++mu) {
            // yddot_nu J^nu_mu with yddot lowered by the metric
            double s = ydd[0] * J(0, mu).real();
            for (int nu = 1; nu < 4; ++nu)
                s -= ydd[nu] * J(nu, mu).real();
            A[mu] = -inv_lambda * s;
        }
        return A;
    };
    return integrate_vec(f, 0.0, tau, tol);
}

double flux_line(const FieldConfig& field, const GaugePath& a_gauge,
                 const Curve& along, double tol) {
    if (!along.y || !along.dy)
        throw InvalidInput("flux_line: along-curve has no evaluators");
    if (!(tol > 0.0))
        throw InvalidInput("flux_line: tol must be positive");
    const FourVector x_start = along.y(along.s0);
    const FourVector x_end = along.y(along.s1);
    const double scale =
        1.0 + std::max(euclid_norm(x_start), euclid_norm(x_end));

    FourVector anchor;
    if (const auto* sl = std::get_if<StraightLineGauge>(&a_gauge)) {
        anchor = sl->anchor;
    } else if (const auto* cp = std::get_if<ClassicalPathGauge>(&a_gauge)) {
        if (!cp->family)
            throw InvalidInput("classical-path gauge has no family generator");
        WorldlinePath probe = cp->family(x_end);
        if (euclid_norm(probe.x_end - x_end) > 1e-8 * scale)
            throw InvalidInput(
                "gauge family does not end at the queried point");
        anchor = probe.x_start;
    } else {
        anchor = std::get<SampledGauge>(a_gauge).points.front();
    }
    if (euclid_norm(anchor - x_start) > 1e-10 * scale)
        throw InvalidInput("flux_line: paths do not share endpoints");

    const double tol_inner = std::max(tol * 0.1, 1e-11);
    auto integrand = [&](double s) {
        const FourVector A =
            potential_from_path(field, a_gauge, along.y(s), tol_inner);
        return comp_sum(A, along.dy(s));
    };

    std::vector<double> cuts{along.s0};
    for (double b : along.breaks)
        if (b > along.s0 && b < along.s1) cuts.push_back(b);
    cuts.push_back(along.s1);

    // Scale scan at cell midpoints: the curve start is the gauge anchor,
    // where wave-type families are lightlike-degenerate by construction.
    const double total_len = along.s1 - along.s0;
    double iscale = 0.0;
    for (int i = 0; i < 9; ++i)
        iscale = std::max(iscale, std::abs(integrand(
                              along.s0 + total_len * (i + 0.5) / 9.0)));
    const double abs_budget =
        std::max(tol, 1e-10) * (1.0 + iscale * total_len) * 0.5;

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double seg = cuts[i + 1] - cuts[i];
        const double abs_tol = abs_budget * seg / total_len;
        total += num::integrate_adaptive(integrand, cuts[i], cuts[i + 1],
                                         abs_tol, tol)
                     .value;
    }
    return total;
}

double flux_surface(const FieldConfig& field, const Curve& along,
                    const Curve& reference, double tol) {
    if (!along.y || !reference.y)
        throw InvalidInput("flux_surface: curves must have evaluators");
    if (!(tol > 0.0))
        throw InvalidInput("flux_surface: tol must be positive");
    const FourVector a0 = along.y(along.s0), a1 = along.y(along.s1);
    const FourVector r0 = reference.y(reference.s0),
                     r1 = reference.y(reference.s1);
    const double scale = 1.0 + std::max({euclid_norm(a0), euclid_norm(a1),
                                         euclid_norm(r0), euclid_norm(r1)});
    if (euclid_norm(a0 - r0) > 1e-10 * scale ||
        euclid_norm(a1 - r1) > 1e-10 * scale)
        throw InvalidInput("flux_surface: curves do not share endpoints");

    const double la = along.s1 - along.s0;
    const double lr = reference.s1 - reference.s0;

    // Integrand over the unit square in (u, t). The (t, u) contraction order
    // orients the boundary so the along edge runs forward, matching flux_line.
    auto patch = [&](double u, double t) {
        const double sa = along.s0 + la * u;
        const double sr = reference.s0 + lr * u;
        const FourVector ya = along.y(sa);
        const FourVector yr = reference.y(sr);
        const FourVector Sig = yr * (1.0 - t) + ya * t;
        const FourVector dSu =
            reference.dy(sr) * ((1.0 - t) * lr) + along.dy(sa) * (t * la);
        const FourVector dSt = ya - yr;
        const FieldTensor F = field_at(field, Sig);
        double val = 0.0;
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu)
                val += F.cov(mu, nu) * dSt[mu] * dSu[nu];
        return val;
    };

    double iscale = 0.0;
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j)
            iscale = std::max(iscale, std::abs(patch(i / 4.0, j / 4.0)));
    const double abs_inner = std::max(tol, 1e-10) * (1.0 + iscale) * 0.05;
    const double abs_outer = std::max(tol, 1e-10) * (1.0 + iscale) * 0.5;

    std::vector<double> cuts{0.0};
    for (double b : along.breaks) {
        const double u = (b - along.s0) / la;
        if (u > 0.0 && u < 1.0) cuts.push_back(u);
    }
    for (double b : reference.breaks) {
        const double u = (b - reference.s0) / lr;
        if (u > 0.0 && u < 1.0) cuts.push_back(u);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(1.0);

    auto outer = [&](double u) {
        auto inner = [&](double t) { return patch(u, t); };
        return num::integrate_adaptive(inner, 0.0, 1.0, abs_inner, tol * 0.5,
                                       2000)
            .value;
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] < 1e-14) continue;
        total += num::integrate_adaptive(outer, cuts[i], cuts[i + 1],
                                         abs_outer * (cuts[i + 1] - cuts[i]),
                                         tol)
                     .value;
    }
    return total;
}

KernelResult gauge_transform_kernel(const KernelResult& K, double phi_x,
                                    double phi_xp, double e) {
    KernelResult out = K;
    const num::cplx shift(0.0, e * (phi_xp - phi_x));
    out.phase_exponent += shift;
    out.amplitude *= std::exp(shift);
    return out;
}

} // namespace propkit
