#pragma once

// Path-dependent vector potentials
//   A_mu(P, x) = int_0^1 F_{nu lambda}(y) (dy^nu/ds) (dy^lambda/dx^mu) ds,
// electromagnetic fluxes between gauge paths, and the gauge transformation
// of kernels. Potentials are returned as covariant components A_mu; line
// integrals contract them with contravariant tangents by plain component
// sums.

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "propkit/fields.hpp"
#include "propkit/kernels.hpp"
#include "propkit/minkowski.hpp"
#include "propkit/trajectories.hpp"

namespace propkit {

// A gauge choice is a family of paths ending at the evaluation point.
struct ClassicalPathGauge {
    std::function<WorldlinePath(const FourVector&)> family; // x -> path x'->x
};
struct StraightLineGauge {
    FourVector anchor; // x'; the path to x is y(s) = anchor + s (x - anchor)
};
struct SampledGauge {
    std::vector<double> params;     // strictly increasing
    std::vector<FourVector> points; // polyline vertices, same length
};
using GaugePath =
    std::variant<ClassicalPathGauge, StraightLineGauge, SampledGauge>;

struct PotentialSample {
    FourVector x;
    FourVector A; // covariant components
    std::string gauge_tag;
};

// Classical-path family with fixed anchor xp and proper time tau.
ClassicalPathGauge classical_family(const FieldConfig& config,
                                    const ParticleParams& p,
                                    const FourVector& xp, double tau);

// Piecewise-smooth parametrized curve, the integration path of the flux
// operations.
struct Curve {
    double s0 = 0.0, s1 = 1.0;
    std::function<FourVector(double)> y;
    std::function<FourVector(double)> dy;
    std::vector<double> breaks; // interior parameters where dy may jump
};
Curve curve_of(const WorldlinePath& path);
Curve curve_straight(const FourVector& x, const FourVector& xp); // x' -> x
Curve curve_polyline(const std::vector<FourVector>& pts);
// Concrete curve of the gauge path ending at x.
Curve realize(const GaugePath& gpath, const FourVector& x);

// A_mu(x) in the gauge generated by gpath. StraightLine uses the analytic
// s delta Jacobian; ClassicalPath rebuilds the family at x +- h e_mu with
// h = 1e-5 (1 + ||x||) for a central-difference endpoint Jacobian. Sampled
// paths define no endpoint family and are rejected.
FourVector potential_from_path(const FieldConfig& field,
                               const GaugePath& gpath, const FourVector& x,
                               double tol);

// Acceleration form -(1/lambda) int yddot_nu (dy^nu/dx^mu) dsigma. Valid
// only on classical families; config supplies the field for the
// is-it-classical residual check.
FourVector potential_classical_accel(const FieldConfig& config,
                                     const ClassicalPathGauge& gpath,
                                     const ParticleParams& p,
                                     const FourVector& x, double tol);

// Line integral of the a_gauge-generated potential along `along`; the two
// must share endpoints.
double flux_line(const FieldConfig& field, const GaugePath& a_gauge,
                 const Curve& along, double tol);

// Surface integral of F over the ruled surface
// Sigma(s, t) = (1-t) reference(s) + t along(s); equals
// flux_line(field, reference-as-gauge, along) for exact fields.
double flux_surface(const FieldConfig& field, const Curve& along,
                    const Curve& reference, double tol);

// K -> e^{-i e Phi(x)} K e^{+i e Phi(x')}: pure phase, |K| preserved.
KernelResult gauge_transform_kernel(const KernelResult& K, double phi_x,
                                    double phi_xp, double e);

} // namespace propkit
