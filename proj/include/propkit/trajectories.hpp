#pragma once

// Classical worldlines y(sigma), sigma in [0, tau], between fixed endpoints
// for the three field configurations, a shooting boundary-value solver for
// the effective Lorentz-force equation yddot = lambda F(y) ydot, the residual
// of that equation along any path, and the classical action.

#include <functional>
#include <optional>

#include "propkit/fields.hpp"
#include "propkit/minkowski.hpp"

namespace propkit {

enum class PathProvenance {
    ClosedFormConstant,
    ClosedFormPlaneWave,
    ClosedFormCombined,
    Shooting
};

struct WorldlinePath {
    double tau = 0.0;
    FourVector x_start, x_end; // y(0) = x_start = x', y(tau) = x_end = x
    PathProvenance provenance = PathProvenance::Shooting;
    std::function<FourVector(double)> y;
    std::function<FourVector(double)> dy;
    std::optional<LightConeBasis> basis; // set for light-cone closed forms
    // Largest |Im| seen when a complex-channel reconstruction was realified;
    // identically zero for intrinsically real constructions.
    double reality_defect = 0.0;
};

struct ActionValue {
    double total = 0.0;
    double mass_term = 0.0;    // m^2 alpha tau
    double kinetic_term = 0.0; // int ydot^2/(4 alpha)
};

// y(sigma) = R(sigma) (x - x') + x' with R the phi1 boundary ratio.
WorldlinePath path_constant(const FieldTensor& F, const ParticleParams& p,
                            const FourVector& x, const FourVector& xp,
                            double tau);

// Light-cone closed form driven by the prefix integrals g_1, g_2 of the
// profile along the (linear) wave phase.
WorldlinePath path_planewave(const PlaneWaveProfile& profile,
                             const LightConeBasis& basis,
                             const ParticleParams& p, const FourVector& x,
                             const FourVector& xp, double tau);

// int_0^sigma f(kx_offset + kx_slope s)^n ds by adaptive quadrature, n in
// {1, 2}.
double g_integral(const WaveProfile& wave, double kx_slope, double kx_offset,
                  int n, double sigma, double tol);

// Aligned-frame combined field: each light-cone channel w.y solves
// u' = -c u + lambda s(sigma) with channel-specific coefficient c and source
// s, integrated by nested prefix quadratures. x and xp are aligned-frame
// coordinates (apply config.frame_transform to input-frame points first).
WorldlinePath path_combined(const Combined& config, const ParticleParams& p,
                            const FourVector& x, const FourVector& xp,
                            double tau);

// Adaptive RK shooting with Newton iteration on the initial velocity; for a
// constant field the endpoint map is affine and is solved in one step.
WorldlinePath shoot_bvp(const FieldConfig& config, const ParticleParams& p,
                        const FourVector& x, const FourVector& xp, double tau,
                        double tol);

// max over Chebyshev-distributed interior samples of
// ||yddot - lambda F(y) ydot|| / (1 + ||lambda F(y) ydot||), yddot by central
// differences of dy.
double eom_residual(const WorldlinePath& path, const FieldConfig& config,
                    const ParticleParams& p, int n_samples);

// Mass term plus adaptive quadrature of the kinetic term; light-cone paths
// are additionally evaluated through their basis decomposition and the two
// results are required to agree to tol.
ActionValue classical_action(const WorldlinePath& path,
                             const ParticleParams& p, double tol);

// Dispatch on the configuration to the matching closed form.
WorldlinePath classical_path(const FieldConfig& config,
                             const ParticleParams& p, const FourVector& x,
                             const FourVector& xp, double tau);

} // namespace propkit
