#pragma once

// Quasiclassical proper-time kernels K(x, x'; tau) for the three field
// configurations, the finite-difference Van Vleck mixed Hessian of the
// classical action, the proper-time Green's function, and the residual of
// the kernel's tau-evolution equation.
//
// Phase convention: every kernel prefactor is sqrt(-det T) / (2 pi)^2 with
// T_{mu nu} = d^2 S / dx^mu dx'^nu the mixed Hessian of the full action in a
// fixed gauge. Equivalently T = -(1/2 alpha) d(v0)_nu/dx^mu, the endpoint
// response of the initial velocity, which is gauge invariant and is how the
// closed forms and kernel_combined evaluate it. The square-root branch is
// anchored positive real at the free limit where -det T = (2 alpha tau)^{-4}.
// Note vanvleck_fd below differentiates the kinetic-plus-mass action alone;
// its Hessian differs from T by the field cross term (for constant fields
// -det T = sqrt(-det T_fd) / (2 alpha tau)^2).

#include <complex>
#include <string>
#include <vector>

#include "propkit/fields.hpp"
#include "propkit/minkowski.hpp"
#include "propkit/trajectories.hpp"

namespace propkit {

struct KernelResult {
    num::cplx amplitude{};      // prefactor * exp(phase_exponent)
    num::cplx prefactor{};
    num::cplx phase_exponent{}; // -i S_c style exponent
    int branch_index = 0;
    std::string config_tag;
};

struct GreensResult {
    num::cplx value{};
    double epsilon_used = 0.0; // smallest damping used before extrapolation
    double tau_cutoff = 0.0;
    double quadrature_error_estimate = 0.0;
};

struct VanVleckResult {
    Matrix4 hessian;          // T_{mu nu} = d^2 S_c / dx^mu dx'^nu
    num::cplx determinant{};
};

// (4 pi alpha tau)^{-2} exp(-i (x-x')^2/(4 alpha tau) - i m^2 alpha tau).
KernelResult kernel_free(const ParticleParams& p, const FourVector& x,
                         const FourVector& xp, double tau);

// Constant uniform field: exponent through M = h(lambda F tau / 2)/tau with
// h(X) = X^2 sinh^{-2}(X), prefactor through the endpoint map determinant
// -det T = [(2 alpha)^4 det(phi1(lambda F tau) tau)]^{-1}; F = 0 delegates
// to kernel_free.
KernelResult kernel_constant(const FieldTensor& F, const ParticleParams& p,
                             const FourVector& x, const FourVector& xp,
                             double tau);

// Null (crossed) field closed form; F^3 = 0 truncates h(X) at 1 - X^2/3.
KernelResult kernel_crossed(const FieldTensor& F, const ParticleParams& p,
                            const FourVector& x, const FourVector& xp,
                            double tau);

// Plane wave (Volkov) kernel driven by g_1, g_2 profile integrals.
KernelResult kernel_volkov(const PlaneWaveProfile& profile,
                           const LightConeBasis& basis,
                           const ParticleParams& p, const FourVector& x,
                           const FourVector& xp, double tau, double tol);

// Combined field: classical action in the exponent plus the Van Vleck
// prefactor from central differences of the initial velocity of
// path_combined over endpoint shifts of fd_step (fd_step <= 0 picks a
// separation-scaled default). x and xp are input-frame points; they are
// mapped through config.frame_transform internally.
KernelResult kernel_combined(const Combined& config, const ParticleParams& p,
                             const FourVector& x, const FourVector& xp,
                             double tau, double fd_step, double tol);

// Dispatch to the closed form matching the configuration. For Combined the
// points are input-frame, as in kernel_combined.
KernelResult kernel_for(const FieldConfig& config, const ParticleParams& p,
                        const FourVector& x, const FourVector& xp, double tau,
                        double tol);

// Central-difference mixed Hessian of the classical action at step h per
// component. For Combined configurations the differentiation runs in the
// aligned frame (the determinant is frame-invariant). The action values use
// a fixed-node composite quadrature so that their systematic error cancels
// in the differences.
VanVleckResult vanvleck_fd(const FieldConfig& config, const ParticleParams& p,
                           const FourVector& x, const FourVector& xp,
                           double tau, double h);

// G = -i alpha int_0^infty dtau K(tau) e^{-eps tau}, evaluated for each eps
// in eps_list (positive, decreasing) and polynomially extrapolated to
// eps -> 0. The tau -> 0 endpoint is integrated in u = 1/tau with half-period
// blocks and series acceleration; the tail beyond tau_max is bounded by
// integration by parts against the mass phase.
GreensResult greens_function(const FieldConfig& config,
                             const ParticleParams& p, const FourVector& x,
                             const FourVector& xp,
                             const std::vector<double>& eps_list,
                             double tau_max, double tol);

// Residual of the tau-evolution equation in the classical-path gauge,
//   [-i dK/dtau - e (dPhi/dtau) K - alpha ((i d - e A)^2 - m^2) K] / |K|,
// with A the classical-path potential frozen at this tau and Phi(tau') the
// line integral of that frozen potential along the classical path of
// tau'. The comoving-gauge term e dPhi/dtau accounts for the tau dependence
// of the gauge family itself. All derivatives are central differences of
// step h. m_operator, when positive, replaces p.m inside the evolution
// operator only (negative-control hook).
num::cplx kernel_pde_residual(const FieldConfig& config,
                              const ParticleParams& p, const FourVector& x,
                              const FourVector& xp, double tau, double h,
                              double m_operator = -1.0);

} // namespace propkit
