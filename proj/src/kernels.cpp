#include "propkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <vector>

#include "propkit/errors.hpp"
#include "propkit/gauge.hpp"
#include "propkit/numerics.hpp"

namespace propkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
using num::cplx;

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidInput("tau must be positive and finite");
}

cplx free_exponent(const ParticleParams& p, const FourVector& delta,
                   double tau) {
    const double s2 = dot(delta, delta);
    return cplx(0.0, -1.0) *
           (s2 / (4.0 * p.alpha * tau) + p.m * p.m * p.alpha * tau);
}

double free_prefactor(const ParticleParams& p, double tau) {
    const double q = 4.0 * kPi * p.alpha * tau;
    return 1.0 / (q * q);
}

KernelResult assemble(cplx prefactor, cplx exponent, int branch,
                      const char* tag) {
    KernelResult k;
    k.prefactor = prefactor;
    k.phase_exponent = exponent;
    k.amplitude = prefactor * std::exp(exponent);
    k.branch_index = branch;
    k.config_tag = tag;
    return k;
}

// Nearest caustic proper time from the eigenvalues of lambda F / 2 (the
// per-unit-tau generator): sinh(a tau) is singular at tau = k pi / Im(a).
double nearest_caustic_tau(const FieldTensor& F, double lambda, double tau) {
    Matrix4 A = mixed_tensor(F) * (0.5 * lambda);
    double best = -1.0;
    for (const cplx& a : eigenvalues4(A)) {
        const double im = std::abs(a.imag());
        if (im < 1e-14) continue;
        const double k = std::max(1.0, std::round(tau * im / kPi));
        for (double kk : {k - 1.0, k, k + 1.0}) {
            if (kk < 1.0) continue;
            const double tc = kk * kPi / im;
            if (best < 0.0 || std::abs(tc - tau) < std::abs(best - tau))
                best = tc;
        }
    }
    return best;
}

// Fixed-node composite action: deterministic panels so the quadrature error
// varies smoothly with the endpoints and cancels in Hessian differences.
double action_fixed(const WorldlinePath& path, const ParticleParams& p,
                    int panels) {
    const double tau = path.tau;
    const double w = tau / panels;
    auto kin = [&path](double s) {
        const FourVector v = path.dy(s);
        return dot(v, v);
    };
    double acc = 0.0;
    for (int i = 0; i < panels; ++i)
        acc += num::gauss8(kin, i * w, (i + 1) * w);
    return p.m * p.m * p.alpha * tau + acc / (4.0 * p.alpha);
}

int action_panel_count(const FieldConfig& config, const FourVector& x,
                       const FourVector& xp) {
    double cycles = 0.0;
    if (const auto* pw = std::get_if<PlaneWave>(&config)) {
        cycles = pw->profile.wave.frequency_hint() *
                 std::abs(dot(pw->profile.k, x - xp)) / (2.0 * kPi);
    } else if (const auto* cb = std::get_if<Combined>(&config)) {
        cycles = cb->profile.wave.frequency_hint() *
                 std::abs(dot(cb->profile.k, x - xp)) / (2.0 * kPi);
    }
    const double n = 64.0 + 16.0 * cycles;
    const double base = std::holds_alternative<Combined>(config) ? 256.0 : n;
    return static_cast<int>(std::ceil(std::min(std::max(base, n), 4096.0)));
}

// Mixed second derivatives of a generic two-point action by central
// differences.
VanVleckResult vanvleck_core(
    const std::function<double(const FourVector&, const FourVector&)>& S,
    const FourVector& x, const FourVector& xp, double h) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw InvalidInput("vanvleck_fd: step h must be positive and finite");
    VanVleckResult out;
    out.hessian.is_real = true;
    const double inv4h2 = 1.0 / (4.0 * h * h);
    for (int mu = 0; mu < 4; ++mu) {
        FourVector xpl = x, xmi = x;
        xpl[mu] += h;
        xmi[mu] -= h;
        for (int nu = 0; nu < 4; ++nu) {
            FourVector xppl = xp, xpmi = xp;
            xppl[nu] += h;
            xpmi[nu] -= h;
            const double v = (S(xpl, xppl) - S(xpl, xpmi) - S(xmi, xppl) +
                              S(xmi, xpmi)) *
                             inv4h2;
            out.hessian(mu, nu) = v;
        }
    }
    out.determinant = out.hessian.det();
    return out;
}

} // namespace

KernelResult kernel_free(const ParticleParams& p, const FourVector& x,
                         const FourVector& xp, double tau) {
    check_tau(tau);
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    return assemble(free_prefactor(p, tau), free_exponent(p, x - xp, tau), 0,
                    "free");
}

KernelResult kernel_constant(const FieldTensor& F, const ParticleParams& p,
                             const FourVector& x, const FourVector& xp,
                             double tau) {
    check_tau(tau);
    if (F.max_abs() == 0.0) {
        KernelResult k = kernel_free(p, x, xp, tau);
        k.config_tag = "constant";
        return k;
    }
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    const FourVector delta = x - xp;
    const Matrix4 X = mixed_tensor(F) * (0.5 * p.lambda * tau);
    Matrix4 H;
    try {
        H = sinhc_inv_sq(X);
    } catch (const NumericalFailure& err) {
        const double tc = nearest_caustic_tau(F, p.lambda, tau);
        std::ostringstream os;
        os << "kernel_constant: caustic, sinh(lambda F tau/2) is singular "
              "near tau = "
           << tc << " (" << err.what() << ")";
        throw NumericalFailure(os.str());
    }
    const Matrix4 M = H * (1.0 / tau);

    const cplx quad = dot(delta, M.apply(delta));
    const cplx exponent =
        cplx(0.0, -1.0) *
        (quad / (4.0 * p.alpha) + cplx(p.m * p.m * p.alpha * tau, 0.0));

    // Fixed-gauge Van Vleck determinant through the endpoint map: the mixed
    // Hessian of the fixed-gauge action is -(1/2a) dv'/dx with v' = D^{-1}
    // (x - x') the initial velocity, D = phi1(lambda F tau) tau, so
    // -det T = 1/((2a)^4 det D). Eigenvalue pairs +-z of lambda F tau give
    // det D = tau^4 prod (sinh(z/2)/(z/2))^2 > 0 between caustics.
    const Matrix4 D = phi1(mixed_tensor(F) * (p.lambda * tau)) * tau;
    const cplx dd = D.det();
    const double a2 = 2.0 * p.alpha;
    const cplx d = 1.0 / (a2 * a2 * a2 * a2 * dd);
    if (!(d.real() > 0.0) || std::abs(d.imag()) > 1e-6 * std::abs(d))
        throw NumericalFailure(
            "kernel_constant: Van Vleck determinant is not positive real; "
            "outside the validity of the real-field branch anchor");
    const BranchedSqrt bs = sqrt_continuous(d, std::nullopt);
    return assemble(bs.value / (4.0 * kPi * kPi), exponent, bs.branch_index,
                    "constant");
}

KernelResult kernel_crossed(const FieldTensor& F, const ParticleParams& p,
                            const FourVector& x, const FourVector& xp,
                            double tau) {
    check_tau(tau);
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    const auto [i1, i2] = invariants(F);
    const double fs = F.max_abs();
    const double gate = 1e-10 * std::max(1.0, fs * fs);
    if (std::abs(i1) > gate || std::abs(i2) > gate)
        throw InvalidInput("not a crossed/null field");

    const FourVector delta = x - xp;
    const Matrix4 mixed = mixed_tensor(F);
    const Matrix4 F2 = mixed * mixed;
    const double quad2 = dot(delta, F2.apply(delta)).real();
    const cplx exponent =
        free_exponent(p, delta, tau) +
        cplx(0.0, 1.0) *
            (p.lambda * p.lambda * tau / (48.0 * p.alpha) * quad2);
    return assemble(free_prefactor(p, tau), exponent, 0, "crossed");
}

KernelResult kernel_volkov(const PlaneWaveProfile& profile,
                           const LightConeBasis& basis,
                           const ParticleParams& p, const FourVector& x,
                           const FourVector& xp, double tau, double tol) {
    check_tau(tau);
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    if (!(tol > 0.0))
        throw InvalidInput("kernel_volkov: tol must be positive");
    const FourVector delta = x - xp;
    const double kD = dot(basis.k, delta);
    if (std::abs(kD) <= 1e-12 * std::max(euclid_norm(delta), 1e-300))
        throw InvalidInput(
            "lightlike-degenerate endpoints: k.(x - x') vanishes and the "
            "wave-phase average divides by it");
    const double slope = kD / tau;
    const double offset = dot(basis.k, xp);
    const double g1 = g_integral(profile.wave, slope, offset, 1, tau, tol);
    const double g2 = g_integral(profile.wave, slope, offset, 2, tau, tol);
    const double l2 = p.lambda * p.lambda;
    const cplx exponent =
        free_exponent(p, delta, tau) +
        cplx(0.0, -1.0) * (l2 / (4.0 * p.alpha * tau) * g1 * g1) +
        cplx(0.0, 1.0) * (l2 / (4.0 * p.alpha) * g2);
    return assemble(free_prefactor(p, tau), exponent, 0, "volkov");
}

VanVleckResult vanvleck_fd(const FieldConfig& config, const ParticleParams& p,
                           const FourVector& x, const FourVector& xp,
                           double tau, double h) {
    check_tau(tau);
    if (const auto* cb = std::get_if<Combined>(&config)) {
        const FourVector xa = lorentz_vec(cb->frame_transform, x);
        const FourVector xpa = lorentz_vec(cb->frame_transform, xp);
        const int panels = action_panel_count(config, xa, xpa);
        const Combined cfg = *cb;
        auto S = [&cfg, &p, tau, panels](const FourVector& a,
                                         const FourVector& b) {
            return action_fixed(path_combined(cfg, p, a, b, tau), p, panels);
        };
        return vanvleck_core(S, xa, xpa, h);
    }
    const int panels = action_panel_count(config, x, xp);
    auto S = [&config, &p, tau, panels](const FourVector& a,
                                        const FourVector& b) {
        return action_fixed(classical_path(config, p, a, b, tau), p, panels);
    };
    return vanvleck_core(S, x, xp, h);
}

KernelResult kernel_combined(const Combined& config, const ParticleParams& p,
                             const FourVector& x, const FourVector& xp,
                             double tau, double fd_step, double tol) {
    check_tau(tau);
    if (!(tol > 0.0))
        throw InvalidInput("kernel_combined: tol must be positive");
    const FourVector xa = lorentz_vec(config.frame_transform, x);
    const FourVector xpa = lorentz_vec(config.frame_transform, xp);

    const WorldlinePath path = path_combined(config, p, xa, xpa, tau);
    const ActionValue act =
        classical_action(path, p, std::max(std::min(tol, 1e-10), 1e-13));

    const double h =
        fd_step > 0.0 ? fd_step : 1e-4 * (1.0 + euclid_norm(xa - xpa));
    // Fixed-gauge mixed action Hessian through the endpoint response of the
    // initial velocity: T_{mu nu} = -(1/2a) d(v0)_nu/dx^mu, since the
    // initial canonical momentum is v0/(2a) + e A(x') and A(x') does not
    // move with x. Lowering nu contributes det g = -1 which cancels the
    // overall sign, so -det T = det(dv0^nu/dx^mu)/(2a)^4.
    auto velocity_det = [&](double t) {
        Matrix4 Gv;
        Gv.is_real = true;
        for (int mu = 0; mu < 4; ++mu) {
            FourVector xl = xa, xm = xa;
            xl[mu] += h;
            xm[mu] -= h;
            const FourVector vp =
                path_combined(config, p, xl, xpa, t).dy(0.0);
            const FourVector vm =
                path_combined(config, p, xm, xpa, t).dy(0.0);
            for (int nu = 0; nu < 4; ++nu)
                Gv(mu, nu) = (vp[nu] - vm[nu]) / (2.0 * h);
        }
        const cplx dd = Gv.det();
        const double floor =
            1e-12 * std::pow(std::max(Gv.norm_inf(), 1e-30), 4.0);
        if (std::abs(dd) < floor)
            throw NumericalFailure(
                "caustic: Van Vleck determinant vanishes at this tau");
        const double a2 = 2.0 * p.alpha;
        return dd / (a2 * a2 * a2 * a2);
    };

    const cplx d = velocity_det(tau);
    BranchedSqrt bs;
    if (d.real() > 0.0 && std::abs(d.imag()) <= 0.1 * std::abs(d)) {
        bs = sqrt_continuous(d, std::nullopt);
    } else {
        // Walk the branch up a tau ladder from the free-like small-tau
        // regime.
        std::optional<BranchedSqrt> ref;
        for (double f : {0.125, 0.25, 0.5, 0.75})
            ref = sqrt_continuous(velocity_det(f * tau), ref);
        bs = sqrt_continuous(d, ref);
    }
    return assemble(bs.value / (4.0 * kPi * kPi),
                    cplx(0.0, -1.0) * act.total, bs.branch_index, "combined");
}

KernelResult kernel_for(const FieldConfig& config, const ParticleParams& p,
                        const FourVector& x, const FourVector& xp, double tau,
                        double tol) {
    if (const auto* cu = std::get_if<ConstantUniform>(&config))
        return kernel_constant(cu->F0, p, x, xp, tau);
    if (const auto* pw = std::get_if<PlaneWave>(&config)) {
        const LightConeBasis basis =
            lightcone_basis(pw->profile.k, pw->profile.eps);
        return kernel_volkov(pw->profile, basis, p, x, xp, tau, tol);
    }
    return kernel_combined(std::get<Combined>(config), p, x, xp, tau, -1.0,
                           tol);
}

GreensResult greens_function(const FieldConfig& config,
                             const ParticleParams& p, const FourVector& x,
                             const FourVector& xp,
                             const std::vector<double>& eps_list,
                             double tau_max, double tol) {
    if (eps_list.empty())
        throw InvalidInput("greens_function: eps_list must be nonempty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw InvalidInput("greens_function: eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw InvalidInput(
                "greens_function: eps_list must be strictly decreasing");
    }
    if (!(tau_max > 0.0))
        throw InvalidInput("greens_function: tau_max must be positive");
    if (!(tol > 0.0))
        throw InvalidInput("greens_function: tol must be positive");

    const FourVector delta = x - xp;
    const double s2 = dot(delta, delta);
    const double xsc = 1.0 + euclid_norm(delta) * euclid_norm(delta);
    if (std::abs(s2) < 1e-8 * xsc)
        throw NumericalFailure(
            "greens_function: separation too close to the light cone; the "
            "proper-time integral does not converge");

    const double alpha = p.alpha;
    const double ktol = std::max(tol * 1e-2, 1e-10);
    auto K = [&](double t) {
        return kernel_for(config, p, x, xp, t, ktol).amplitude;
    };

    const double tau0 = std::clamp(std::abs(s2) / (8.0 * kPi * alpha),
                                   tau_max * 1e-6, tau_max * 0.25);
    const double half_period = 4.0 * kPi * alpha / std::abs(s2);
    const double mass_rate = p.m * p.m * alpha;

    std::vector<cplx> values;
    double quad_err = 0.0;
    double tail_worst = 0.0;
    for (double eps : eps_list) {
        auto g = [&](double u) {
            return cplx(0.0, -alpha) * K(1.0 / u) * std::exp(-eps / u) /
                   (u * u);
        };
        // Head tau in (0, tau0]: u = 1/tau blocks of half an oscillation
        // period, accelerated.
        const double u0 = 1.0 / tau0;
        std::vector<cplx> partial;
        cplx sum(0.0, 0.0);
        const int blocks = 48;
        for (int j = 0; j < blocks; ++j) {
            const double a = u0 + j * half_period;
            const double b = a + half_period;
            sum += num::integrate_adaptive(g, a, b, 1e-300, 1e-9).value;
            partial.push_back(sum);
        }
        double head_err = 0.0;
        const cplx head = num::accelerate_oscillatory(partial, head_err);

        auto mid = [&](double t) {
            return cplx(0.0, -alpha) * K(t) * std::exp(-eps * t);
        };
        auto mres = num::integrate_adaptive(
            mid, tau0, tau_max,
            std::max(1e-15, tol * 0.02 * std::abs(head)), tol * 0.1);

        const double kAmp = std::abs(K(tau_max));
        const double rate = mass_rate > 0.0 ? mass_rate : eps;
        const double tail = alpha * kAmp * std::exp(-eps * tau_max) / rate *
                            (1.0 + 2.0 / (tau_max * rate));
        tail_worst = std::max(tail_worst, tail);
        quad_err = std::max(quad_err, head_err + mres.error_estimate);
        values.push_back(head + mres.value);
    }

    GreensResult out;
    out.epsilon_used = eps_list.back();
    out.tau_cutoff = tau_max;
    double spread = 0.0;
    if (values.size() == 1) {
        out.value = values.front();
        out.quadrature_error_estimate = quad_err + tail_worst;
    } else {
        double next_err = 0.0;
        out.value = num::neville_at_zero(eps_list, values, next_err);
        spread = next_err;
        if (values.size() >= 3) {
            std::vector<double> e2(eps_list.begin() + 1, eps_list.end());
            std::vector<cplx> v2(values.begin() + 1, values.end());
            double dummy = 0.0;
            spread = std::max(
                spread,
                std::abs(out.value - num::neville_at_zero(e2, v2, dummy)));
        }
        out.quadrature_error_estimate = spread + quad_err + tail_worst;
    }
    // Failure contract: the tail is the part a larger tau_max buys back, so
    // it is held to tol; the eps-extrapolation spread is reported, and only
    // a gross spread (the ladder failed outright) is an error.
    const double scale = std::max(std::abs(out.value), 1e-300);
    if (tail_worst > tol * scale) {
        std::ostringstream os;
        os << "greens_function: tau_max too small, tail estimate "
           << tail_worst << " exceeds tol * |G| = " << tol * scale
           << "; increase tau_max";
        throw NumericalFailure(os.str());
    }
    if (spread > 0.05 * scale) {
        std::ostringstream os;
        os << "greens_function: eps extrapolation spread " << spread
           << " is a gross fraction of |G| = " << std::abs(out.value)
           << "; refine eps_list";
        throw NumericalFailure(os.str());
    }
    return out;
}

num::cplx kernel_pde_residual(const FieldConfig& config,
                              const ParticleParams& p, const FourVector& x,
                              const FourVector& xp, double tau, double h,
                              double m_operator) {
    check_tau(tau);
    if (!(h > 0.0) || !(h < 0.25 * tau))
        throw InvalidInput(
            "kernel_pde_residual: need 0 < h < tau/4 for the tau stencil");
    const double e = p.e;
    const double alpha = p.alpha;
    const double mop = m_operator > 0.0 ? m_operator : p.m;
    const double ktol = 1e-10;
    const double ptol = 1e-9;

    auto K = [&](const FourVector& xx, double tt) {
        return kernel_for(config, p, xx, xp, tt, ktol).amplitude;
    };

    // Gauge family frozen at this tau; the potential and the comoving flux
    // both refer to it.
    const ClassicalPathGauge fam = classical_family(config, p, xp, tau);
    const GaugePath gp = fam;

    const cplx K0 = K(x, tau);
    const double absK = std::abs(K0);
    if (!(absK > 0.0))
        throw NumericalFailure("kernel_pde_residual: vanishing kernel");

    cplx Kp[4], Km[4];
    FourVector Ap[4], Am[4];
    for (int mu = 0; mu < 4; ++mu) {
        FourVector xu = x, xd = x;
        xu[mu] += h;
        xd[mu] -= h;
        Kp[mu] = K(xu, tau);
        Km[mu] = K(xd, tau);
        Ap[mu] = potential_from_path(config, gp, xu, ptol);
        Am[mu] = potential_from_path(config, gp, xd, ptol);
    }
    const FourVector A0 = potential_from_path(config, gp, x, ptol);
    const cplx Ktp = K(x, tau + h);
    const cplx Ktm = K(x, tau - h);

    // d Phi / d tau: flux of the frozen potential along the classical path
    // of the perturbed proper time.
    auto flux_at = [&](double tt) {
        const WorldlinePath w = classical_path(config, p, x, xp, tt);
        return flux_line(config, gp, curve_of(w), 1e-9);
    };
    const double dPhi = (flux_at(tau + h) - flux_at(tau - h)) / (2.0 * h);

    const cplx dK_tau = (Ktp - Ktm) / (2.0 * h);

    static constexpr double gdiag[4] = {1.0, -1.0, -1.0, -1.0};
    cplx lap(0.0, 0.0);
    cplx AdotD(0.0, 0.0);
    double divA = 0.0;
    double A2 = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        lap += gdiag[mu] * (Kp[mu] - 2.0 * K0 + Km[mu]) / (h * h);
        const cplx dK = (Kp[mu] - Km[mu]) / (2.0 * h);
        AdotD += gdiag[mu] * A0[mu] * dK;
        divA += gdiag[mu] * (Ap[mu][mu] - Am[mu][mu]) / (2.0 * h);
        A2 += gdiag[mu] * A0[mu] * A0[mu];
    }

    const cplx HK = -lap - cplx(0.0, 1.0) * e * divA * K0 -
                    cplx(0.0, 2.0) * e * AdotD + e * e * A2 * K0 -
                    mop * mop * K0;
    const cplx resid =
        cplx(0.0, -1.0) * dK_tau - e * dPhi * K0 - alpha * HK;
    return resid / absK;
}

} // namespace propkit
