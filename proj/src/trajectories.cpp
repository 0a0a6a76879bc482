#include "propkit/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "propkit/errors.hpp"
#include "propkit/numerics.hpp"

namespace propkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidInput("tau must be positive and finite");
}

// Panels for prefix tables: resolve the fastest angular rate with margin.
int panel_count(double rate, double len) {
    double osc = std::abs(rate) * len / (2.0 * kPi);
    double n = 48.0 * (osc + 1.0);
    return static_cast<int>(std::ceil(std::min(std::max(n, 256.0), 16384.0)));
}

// One light-cone scalar w.y solving u' = -c u + lambda s(sigma) with value
// boundary data w.y(0) = wxp, w.y(tau) = wxp + wD. With
// h(s) = int_0^s e^{c r} src(r) dr and S(s) = int_0^s e^{-c r} h(r) dr the
// solution is
//   u(s)   = e^{-c s} (u0 + lambda h(s)),
//   w.y(s) = wxp + s phi1(-c s)/(tau phi1(-c tau)) (wD - lambda S(tau))
//            + lambda S(s),
// which meets both endpoints exactly for every quadrature error in S.
struct LightConeChannel {
    num::cplx c{};
    num::cplx wxp{}, wD{};
    double lam = 0.0;
    num::cplx inv_tphi{}; // 1/(tau phi1(-c tau))
    num::cplx S_tau{};
    num::cplx u0{};
    std::shared_ptr<num::PrefixIntegral> H, S;

    num::cplx value(double s) const {
        num::cplx ratio = s * num::phi1_scalar(-c * s) * inv_tphi;
        num::cplx Sv = S ? S->eval(s) : num::cplx(0.0, 0.0);
        return wxp + ratio * (wD - lam * S_tau) + lam * Sv;
    }
    num::cplx vel(double s) const {
        num::cplx Hv = H ? H->eval(s) : num::cplx(0.0, 0.0);
        return std::exp(-c * s) * (u0 + lam * Hv);
    }
};

LightConeChannel make_channel(num::cplx c, num::cplx wxp, num::cplx wD,
                              double lam, double tau,
                              const std::function<num::cplx(double)>& src,
                              int panels, const char* name) {
    LightConeChannel ch;
    ch.c = c;
    ch.wxp = wxp;
    ch.wD = wD;
    ch.lam = lam;
    num::cplx ph = num::phi1_scalar(-c * tau);
    if (std::abs(ph) < 1e-8) {
        std::ostringstream os;
        os << "combined path: channel " << name
           << " is resonant, phi1(-c tau) vanishes for c tau = ("
           << (c * tau).real() << ", " << (c * tau).imag()
           << "); the boundary value problem is singular at this tau";
        throw NumericalFailure(os.str());
    }
    ch.inv_tphi = 1.0 / (tau * ph);
    if (src) {
        ch.H = std::make_shared<num::PrefixIntegral>(
            [c, src](double r) { return std::exp(c * r) * src(r); }, tau,
            panels);
        auto H = ch.H;
        ch.S = std::make_shared<num::PrefixIntegral>(
            [c, H](double r) { return std::exp(-c * r) * H->eval(r); }, tau,
            panels);
        ch.S_tau = ch.S->total();
    }
    ch.u0 = (ch.wD - lam * ch.S_tau) * ch.inv_tphi;
    return ch;
}

// Shared state behind the combined-field path evaluators.
struct CombinedState {
    LightConeBasis basis;
    LightConeChannel ck, cp, cm, ckb; // k, eps_plus, eps_minus, kbar

    // Scalars (k.y, eps.y, epsbar.y, kbar.y) before realification.
    void scalars(double s, num::cplx out[4], bool velocity) const {
        num::cplx kv = velocity ? ck.vel(s) : ck.value(s);
        num::cplx pv = velocity ? cp.vel(s) : cp.value(s);
        num::cplx mv = velocity ? cm.vel(s) : cm.value(s);
        num::cplx bv = velocity ? ckb.vel(s) : ckb.value(s);
        const double inv_sqrt2 = 0.70710678118654752440;
        out[0] = kv;
        out[1] = (pv + mv) * inv_sqrt2;                      // eps.y
        out[2] = num::cplx(0.0, -1.0) * (pv - mv) * inv_sqrt2; // epsbar.y
        out[3] = bv;
    }

    FourVector reconstruct(double s, bool velocity) const {
        num::cplx sc[4];
        scalars(s, sc, velocity);
        // v = (kbar.v) k + (k.v) kbar - (eps.v) eps - (epsbar.v) epsbar
        return basis.k * sc[3].real() + basis.kbar * sc[0].real() -
               basis.eps * sc[1].real() - basis.epsbar * sc[2].real();
    }
};

} // namespace

WorldlinePath path_constant(const FieldTensor& F, const ParticleParams& p,
                            const FourVector& x, const FourVector& xp,
                            double tau) {
    check_tau(tau);
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    const FourVector delta = x - xp;
    const Matrix4 A = mixed_tensor(F) * p.lambda;
    Matrix4 D = phi1(A * tau) * tau;
    CFourVector rhs(delta);
    if (!D.solve(rhs)) {
        // Reuses the boundary-ratio diagnostics to name the resonant
        // eigenvalue before giving up.
        path_ratio(F, p.lambda, tau, tau);
        throw NumericalFailure(
            "path_constant: singular endpoint map, tau sits on a resonance");
    }
    const FourVector v0 = rhs.real();

    WorldlinePath w;
    w.tau = tau;
    w.x_start = xp;
    w.x_end = x;
    w.provenance = PathProvenance::ClosedFormConstant;
    w.y = [A, v0, xp](double s) {
        Matrix4 P = phi1(A * s) * s;
        return xp + P.apply_real(v0);
    };
    w.dy = [A, v0](double s) { return expm(A * s).apply_real(v0); };
    return w;
}

WorldlinePath path_planewave(const PlaneWaveProfile& profile,
                             const LightConeBasis& basis,
                             const ParticleParams& p, const FourVector& x,
                             const FourVector& xp, double tau) {
    check_tau(tau);
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    const FourVector delta = x - xp;
    const double kD = dot(basis.k, delta);
    if (std::abs(kD) <= 1e-12 * std::max(euclid_norm(delta), 1e-300))
        throw InvalidInput(
            "lightlike-degenerate endpoints: k.(x - x') vanishes and the "
            "kbar trajectory component divides by it");

    const double slope = kD / tau;
    const double offset = dot(basis.k, xp);
    const WaveProfile wave = profile.wave;
    const int panels =
        panel_count(wave.frequency_hint() * std::abs(slope), tau);

    auto P1 = std::make_shared<num::PrefixIntegral>(
        [wave, slope, offset](double s) {
            return num::cplx(wave.f(offset + slope * s), 0.0);
        },
        tau, panels);
    auto P2 = std::make_shared<num::PrefixIntegral>(
        [wave, slope, offset](double s) {
            double v = wave.f(offset + slope * s);
            return num::cplx(v * v, 0.0);
        },
        tau, panels);
    const double g1t = P1->total().real();
    const double g2t = P2->total().real();

    const double eD = dot(basis.eps, delta);
    const double ebD = dot(basis.epsbar, delta);
    const double kbD = dot(basis.kbar, delta);
    const double kxp = offset;
    const double exp0 = dot(basis.eps, xp);
    const double ebxp = dot(basis.epsbar, xp);
    const double kbxp = dot(basis.kbar, xp);
    const double lam = p.lambda;
    const LightConeBasis b = basis;

    WorldlinePath w;
    w.tau = tau;
    w.x_start = xp;
    w.x_end = x;
    w.provenance = PathProvenance::ClosedFormPlaneWave;
    w.basis = basis;
    w.y = [=](double s) {
        const double g1 = P1->eval(s).real();
        const double g2 = P2->eval(s).real();
        const double comb = tau * g1 - s * g1t;
        const double ky = (s / tau) * kD + kxp;
        const double ey = (s / tau) * eD + exp0 + (lam / tau) * comb;
        const double eby = (s / tau) * ebD + ebxp;
        const double kby = lam * comb / (kD * tau) * (eD - lam * g1t) +
                           lam * lam / (2.0 * kD) * (tau * g2 - s * g2t) +
                           (s / tau) * kbD + kbxp;
        return b.k * kby + b.kbar * ky - b.eps * ey - b.epsbar * eby;
    };
    w.dy = [=](double s) {
        const double fs = wave.f(offset + slope * s);
        const double combd = tau * fs - g1t;
        const double kyd = kD / tau;
        const double eyd = eD / tau + (lam / tau) * combd;
        const double ebyd = ebD / tau;
        const double kbyd = lam * combd / (kD * tau) * (eD - lam * g1t) +
                            lam * lam / (2.0 * kD) * (tau * fs * fs - g2t) +
                            kbD / tau;
        return b.k * kbyd + b.kbar * kyd - b.eps * eyd - b.epsbar * ebyd;
    };
    return w;
}

double g_integral(const WaveProfile& wave, double kx_slope, double kx_offset,
                  int n, double sigma, double tol) {
    if (n != 1 && n != 2)
        throw InvalidInput("g_integral: n must be 1 or 2");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw InvalidInput("g_integral: sigma must be nonnegative and finite");
    if (!(tol > 0.0))
        throw InvalidInput("g_integral: tol must be positive");
    if (sigma == 0.0)
        return 0.0;

    // Absolute floor from a coarse amplitude scan so oscillatory integrals
    // that cancel to near zero still terminate.
    double fscale = 0.0;
    for (int i = 0; i <= 32; ++i) {
        double s = sigma * static_cast<double>(i) / 32.0;
        fscale = std::max(fscale, std::abs(wave.f(kx_offset + kx_slope * s)));
    }
    double unit = std::pow(std::max(fscale, 1e-30), n) * sigma;
    double abs_tol = tol * unit * 1e-2;

    auto f = [&](double s) {
        double v = wave.f(kx_offset + kx_slope * s);
        return (n == 1) ? v : v * v;
    };
    return num::integrate_adaptive(f, 0.0, sigma, abs_tol, tol).value;
}

WorldlinePath path_combined(const Combined& config, const ParticleParams& p,
                            const FourVector& x, const FourVector& xp,
                            double tau) {
    check_tau(tau);
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    const LightConeBasis& b = config.aligned;
    const FourVector delta = x - xp;
    const double kD = dot(b.k, delta);
    if (std::abs(kD) <= 1e-12 * std::max(euclid_norm(delta), 1e-300))
        throw InvalidInput(
            "lightlike-degenerate endpoints: k.(x - x') vanishes and the "
            "kbar trajectory component divides by it");

    const double lam = p.lambda;
    const double E0 = config.E0;
    const double B0 = config.B0;
    const WaveProfile wave = config.profile.wave;

    auto st = std::make_shared<CombinedState>();
    st->basis = b;

    // Channel k: u' = -lambda E0 u, no source. Real throughout.
    const num::cplx c_k(lam * E0, 0.0);
    st->ck = make_channel(c_k, dot(b.k, xp), kD, lam, tau, nullptr, 0, "k");

    // Wave phase along the path and its rate, needed by every source.
    const LightConeChannel ckv = st->ck;
    auto phi_of = [ckv](double s) { return ckv.value(s).real(); };
    auto kdot_of = [ckv](double s) { return ckv.vel(s).real(); };

    double rate_k = std::abs(kD / tau) * std::exp(std::abs(lam * E0) * tau);
    double rate = wave.frequency_hint() * rate_k +
                  std::abs(lam * B0) + std::abs(lam * E0);
    const int panels = panel_count(rate, tau);

    // Channels eps_plus / eps_minus: u' = -(+-i lambda B0) u + lambda fdot/sqrt2
    // with fdot = f'(phi) k.ydot. Built independently; their conjugacy is an
    // observable invariant, not an input.
    const double inv_sqrt2 = 0.70710678118654752440;
    std::function<num::cplx(double)> src_eps =
        [wave, phi_of, kdot_of, inv_sqrt2](double s) {
            return num::cplx(wave.fprime(phi_of(s)) * kdot_of(s) * inv_sqrt2,
                             0.0);
        };
    st->cp = make_channel(num::cplx(0.0, lam * B0), dot(xp, b.eps_plus),
                          dot(delta, b.eps_plus), lam, tau, src_eps, panels,
                          "eps_plus");
    st->cm = make_channel(num::cplx(0.0, -lam * B0), dot(xp, b.eps_minus),
                          dot(delta, b.eps_minus), lam, tau, src_eps, panels,
                          "eps_minus");

    // Channel kbar: u' = lambda E0 u + lambda (eps.ydot) fdot / (k.ydot);
    // fdot carries a factor k.ydot, so the source is (eps.ydot) f'(phi) with
    // no division.
    const LightConeChannel cpv = st->cp;
    const LightConeChannel cmv = st->cm;
    std::function<num::cplx(double)> src_kbar =
        [wave, phi_of, cpv, cmv, inv_sqrt2](double s) {
            num::cplx edot = (cpv.vel(s) + cmv.vel(s)) * inv_sqrt2;
            return edot * wave.fprime(phi_of(s));
        };
    st->ckb = make_channel(num::cplx(-lam * E0, 0.0), dot(b.kbar, xp),
                           dot(b.kbar, delta), lam, tau, src_kbar, panels,
                           "kbar");

    // Largest imaginary residue over a Chebyshev grid; the conjugate channel
    // pair should cancel it to quadrature accuracy.
    double defect = 0.0;
    for (int j = 0; j <= 32; ++j) {
        double s = 0.5 * tau * (1.0 - std::cos(kPi * j / 32.0));
        num::cplx sc[4];
        st->scalars(s, sc, false);
        for (int i = 0; i < 4; ++i)
            defect = std::max(defect, std::abs(sc[i].imag()));
        st->scalars(s, sc, true);
        for (int i = 0; i < 4; ++i)
            defect = std::max(defect, std::abs(sc[i].imag()));
    }

    WorldlinePath w;
    w.tau = tau;
    w.x_start = xp;
    w.x_end = x;
    w.provenance = PathProvenance::ClosedFormCombined;
    w.basis = b;
    w.reality_defect = defect;
    w.y = [st](double s) { return st->reconstruct(s, false); };
    w.dy = [st](double s) { return st->reconstruct(s, true); };
    return w;
}

WorldlinePath shoot_bvp(const FieldConfig& config, const ParticleParams& p,
                        const FourVector& x, const FourVector& xp, double tau,
                        double tol) {
    check_tau(tau);
    if (!x.finite() || !xp.finite())
        throw InvalidInput("endpoints must be finite");
    if (!(tol > 0.0))
        throw InvalidInput("shoot_bvp: tol must be positive");
    const FourVector delta = x - xp;
    const double lam = p.lambda;

    auto rhs = [&config, lam](double, const std::array<double, 8>& z,
                              std::array<double, 8>& dz) {
        FourVector y{z[0], z[1], z[2], z[3]};
        FourVector v{z[4], z[5], z[6], z[7]};
        FourVector a = field_at(config, y).apply_mixed(v) * lam;
        dz = {v[0], v[1], v[2], v[3], a[0], a[1], a[2], a[3]};
    };
    const double y_scale = 1.0 + std::max(euclid_norm(x), euclid_norm(xp));
    auto integrate_from = [&](const FourVector& v0) {
        std::array<double, 8> z0{xp[0], xp[1], xp[2], xp[3],
                                 v0[0], v0[1], v0[2], v0[3]};
        return num::integrate_ode<8>(rhs, z0, 0.0, tau, 1e-10,
                                     1e-13 * y_scale);
    };
    auto endpoint_residual = [&](const num::OdeSolution<8>& s) {
        const auto& zf = s.y.back();
        return FourVector{zf[0] - x[0], zf[1] - x[1], zf[2] - x[2],
                          zf[3] - x[3]};
    };

    FourVector v = delta * (1.0 / tau);
    if (const auto* cu = std::get_if<ConstantUniform>(&config)) {
        // Endpoint map is affine in v; one linear solve lands exactly.
        Matrix4 D = phi1(mixed_tensor(cu->F0) * (lam * tau)) * tau;
        CFourVector r(delta);
        if (D.solve(r))
            v = r.real();
    }

    num::OdeSolution<8> sol = integrate_from(v);
    FourVector r = endpoint_residual(sol);
    double rn = euclid_norm(r);
    double best = rn;
    int iter = 0;
    while (rn > tol) {
        if (++iter > 50) {
            std::ostringstream os;
            os << "shooting Newton did not converge in 50 iterations; best "
                  "endpoint residual "
               << best;
            throw NumericalFailure(os.str());
        }
        const double h = 1e-6 * (1.0 + euclid_norm(v));
        Matrix4 J;
        for (int j = 0; j < 4; ++j) {
            FourVector vj = v;
            vj[j] += h;
            FourVector rj = endpoint_residual(integrate_from(vj));
            for (int i = 0; i < 4; ++i)
                J(i, j) = (rj[i] - r[i]) / h;
        }
        J.is_real = true;
        CFourVector step(FourVector{-r[0], -r[1], -r[2], -r[3]});
        if (!J.solve(step))
            throw NumericalFailure(
                "shooting Newton: singular endpoint Jacobian");
        const FourVector dv = step.real();
        double damp = 1.0;
        bool accepted = false;
        for (int half = 0; half < 8 && !accepted; ++half) {
            FourVector vt = v + dv * damp;
            num::OdeSolution<8> st = integrate_from(vt);
            FourVector rt = endpoint_residual(st);
            double rtn = euclid_norm(rt);
            if (rtn < rn) {
                v = vt;
                sol = std::move(st);
                r = rt;
                rn = rtn;
                accepted = true;
            } else {
                damp *= 0.5;
            }
        }
        if (!accepted) {
            std::ostringstream os;
            os << "shooting Newton stalled, damping produced no decrease; "
                  "endpoint residual "
               << rn;
            throw NumericalFailure(os.str());
        }
        best = std::min(best, rn);
    }

    auto sp = std::make_shared<num::OdeSolution<8>>(std::move(sol));
    WorldlinePath w;
    w.tau = tau;
    w.x_start = xp;
    w.x_end = x;
    w.provenance = PathProvenance::Shooting;
    w.y = [sp](double s) {
        auto z = sp->eval(s);
        return FourVector{z[0], z[1], z[2], z[3]};
    };
    w.dy = [sp](double s) {
        auto z = sp->eval(s);
        return FourVector{z[4], z[5], z[6], z[7]};
    };
    return w;
}

double eom_residual(const WorldlinePath& path, const FieldConfig& config,
                    const ParticleParams& p, int n_samples) {
    if (!path.y || !path.dy)
        throw InvalidInput("eom_residual: path has no evaluators");
    if (n_samples < 4)
        throw InvalidInput("eom_residual: need at least 4 samples");
    const double tau = path.tau;
    const double h0 = tau * 6.0e-6; // cbrt(machine eps) scale
    double worst = 0.0;
    for (int j = 0; j < n_samples; ++j) {
        const double s =
            0.5 * tau *
            (1.0 - std::cos(kPi * (2.0 * j + 1.0) / (2.0 * n_samples)));
        const double h = std::min({h0, 0.5 * s, 0.5 * (tau - s)});
        const FourVector ydd =
            (path.dy(s + h) - path.dy(s - h)) * (1.0 / (2.0 * h));
        const FourVector force =
            field_at(config, path.y(s)).apply_mixed(path.dy(s)) * p.lambda;
        const double resid =
            euclid_norm(ydd - force) / (1.0 + euclid_norm(force));
        worst = std::max(worst, resid);
    }
    return worst;
}

ActionValue classical_action(const WorldlinePath& path,
                             const ParticleParams& p, double tol) {
    if (!path.y || !path.dy)
        throw InvalidInput("classical_action: path has no evaluators");
    if (!(tol > 0.0))
        throw InvalidInput("classical_action: tol must be positive");
    const double tau = path.tau;
    const double inv4a = 1.0 / (4.0 * p.alpha);

    double vscale = 0.0;
    for (int j = 0; j <= 8; ++j)
        vscale = std::max(
            vscale, euclid_norm(path.dy(tau * static_cast<double>(j) / 8.0)));
    const double abs_floor =
        1e-12 * tau * (1.0 + vscale * vscale) * inv4a;

    auto kin = [&](double s) {
        FourVector v = path.dy(s);
        return dot(v, v) * inv4a;
    };
    const double kinetic =
        num::integrate_adaptive(kin, 0.0, tau, abs_floor, tol).value;

    if (path.basis) {
        const LightConeBasis& b = *path.basis;
        auto kin_lc = [&](double s) {
            FourVector v = path.dy(s);
            const double kv = dot(b.k, v);
            const double kbv = dot(b.kbar, v);
            const double ev = dot(b.eps, v);
            const double ebv = dot(b.epsbar, v);
            return (2.0 * kv * kbv - ev * ev - ebv * ebv) * inv4a;
        };
        const double kinetic_lc =
            num::integrate_adaptive(kin_lc, 0.0, tau, abs_floor, tol).value;
        const double allow =
            std::max(10.0 * tol * (1.0 + std::abs(kinetic)), 1e-10);
        if (std::abs(kinetic_lc - kinetic) > allow) {
            std::ostringstream os;
            os << "classical_action: light-cone decomposition of the kinetic "
                  "term disagrees with the direct quadrature by "
               << std::abs(kinetic_lc - kinetic);
            throw NumericalFailure(os.str());
        }
    }

    ActionValue a;
    a.mass_term = p.m * p.m * p.alpha * tau;
    a.kinetic_term = kinetic;
    a.total = a.mass_term + a.kinetic_term;
    return a;
}

WorldlinePath classical_path(const FieldConfig& config,
                             const ParticleParams& p, const FourVector& x,
                             const FourVector& xp, double tau) {
    if (const auto* cu = std::get_if<ConstantUniform>(&config))
        return path_constant(cu->F0, p, x, xp, tau);
    if (const auto* pw = std::get_if<PlaneWave>(&config)) {
        LightConeBasis b = lightcone_basis(pw->profile.k, pw->profile.eps);
        return path_planewave(pw->profile, b, p, x, xp, tau);
    }
    // Combined works in its aligned frame; accept input-frame endpoints and
    // return an input-frame path so field_at(config, y(sigma)) stays
    // consistent along it.
    const auto& cb = std::get<Combined>(config);
    if ((cb.frame_transform - Matrix4::identity()).max_abs() == 0.0)
        return path_combined(cb, p, x, xp, tau);
    const Matrix4 L = cb.frame_transform;
    const Matrix4 Li = lorentz_inverse(L);
    WorldlinePath w =
        path_combined(cb, p, lorentz_vec(L, x), lorentz_vec(L, xp), tau);
    WorldlinePath out = w;
    out.x_start = xp;
    out.x_end = x;
    out.y = [ya = w.y, Li](double s) { return lorentz_vec(Li, ya(s)); };
    out.dy = [da = w.dy, Li](double s) { return lorentz_vec(Li, da(s)); };
    if (w.basis) {
        LightConeBasis b = *w.basis;
        b.k = lorentz_vec(Li, b.k);
        b.kbar = lorentz_vec(Li, b.kbar);
        b.eps = lorentz_vec(Li, b.eps);
        b.epsbar = lorentz_vec(Li, b.epsbar);
        b.eps_plus = Li.apply(b.eps_plus);
        b.eps_minus = Li.apply(b.eps_minus);
        out.basis = b;
    }
    return out;
}

} // namespace propkit
