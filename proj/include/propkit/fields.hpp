#pragma once

// Field configurations: constant uniform tensors, plane-wave profiles, their
// combination, Lorentz invariants, light-cone bases and frame alignment.
//
// Conventions. All FourVector values hold contravariant components. The
// tensor is stored covariantly with F_{0i} = E_i and F_{ij} = -eps_{ijk} B_k.
// The dual is G^{ab} = eps^{abcd} F_{cd}/2 with eps^{0123} = +1, which maps
// (E,B) -> (B,-E) and gives the invariant G.F = -4 E.B.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "propkit/errors.hpp"
#include "propkit/minkowski.hpp"
#include "propkit/numerics.hpp"

namespace propkit {

struct FieldTensor {
    std::array<double, 16> f{}; // covariant F_{mu nu}, antisymmetric

    double cov(int mu, int nu) const { return f[4 * mu + nu]; }
    double& cov(int mu, int nu) { return f[4 * mu + nu]; }

    std::array<double, 3> electric() const;
    std::array<double, 3> magnetic() const;
    double max_abs() const;
    bool is_zero() const { return max_abs() == 0.0; }

    FieldTensor operator+(const FieldTensor& o) const;
    FieldTensor operator-(const FieldTensor& o) const;
    FieldTensor operator*(double s) const;

    // F_{mu nu} v^nu with the first index raised, i.e. (F^mu_nu) v^nu.
    FourVector apply_mixed(const FourVector& v) const;
};

// Raise/lower all indices of a contravariant/covariant vector (metric is its
// own inverse, so the two maps coincide: flip the spatial signs).
FourVector flip_spatial(const FourVector& v);

FieldTensor constant_from_EB(const std::array<double, 3>& E,
                             const std::array<double, 3>& B);
// Antisymmetric wedge k_mu e_nu - k_nu e_mu from contravariant inputs.
FieldTensor wedge_cov(const FourVector& k, const FourVector& eps);

// (I1, I2) = (F.F, G.F) by direct component contraction.
std::pair<double, double> invariants(const FieldTensor& F);
FieldTensor dual(const FieldTensor& F);

// Secular field amplitudes in the frame where E and B are parallel:
// E0 = sqrt(sqrt(I1^2+I2^2)-I1)/2 >= 0, B0 = -sqrt(sqrt(I1^2+I2^2)+I1)/2 <= 0.
std::pair<double, double> secular_amplitudes(const FieldTensor& F0);

enum class ProfileKind { Linear, Sinusoidal, GaussianPulse, Tabulated };

// Scalar wave shape: fprime is the physical waveform, f its antiderivative
// appearing in the trajectory and kernel formulas. Constant shifts of f drop
// out of every observable, so f(0) = 0 is fixed where f is not given in
// closed form.
class WaveProfile {
public:
    WaveProfile() = default; // identically zero (linear, E0 = 0)

    static WaveProfile linear(double E0);
    static WaveProfile sinusoidal(double E0, double omega, double phi0);
    static WaveProfile gaussian_pulse(double E0, double omega, double width);
    static WaveProfile tabulated(std::vector<double> phi,
                                 std::vector<double> fprime);
    static WaveProfile tabulated_csv(const std::string& filename);

    double f(double phi) const;
    double fprime(double phi) const;
    ProfileKind kind() const { return kind_; }
    bool is_identically_zero() const;

    // Scale of d/dphi relative to f's own magnitude; quadrature panel counts
    // are derived from this.
    double frequency_hint() const;
    // Support on which f is defined; unbounded kinds report +-inf.
    std::pair<double, double> support() const;

    double amplitude() const { return e0_; }
    double omega() const { return omega_; }
    double phase_offset() const { return phi0_; }
    double width() const { return width_; }

private:
    ProfileKind kind_ = ProfileKind::Linear;
    double e0_ = 0.0, omega_ = 0.0, phi0_ = 0.0, width_ = 0.0;
    std::shared_ptr<const num::CubicSpline> table_; // tabulated fprime
    double table_f0_ = 0.0;  // antiderivative at phi=0 (or the first knot)
    double tab_hint_ = 0.0;
    double support_lo_ = 0.0, support_hi_ = 0.0;
    std::shared_ptr<const num::PrefixIntegral> pulse_; // cached gaussian f
    double pulse_support_ = 0.0;
    double pulse_f0_ = 0.0;
    double pulse_f_left_ = 0.0, pulse_f_right_ = 0.0;
};

struct PlaneWaveProfile {
    FourVector k;   // null wave vector
    FourVector eps; // spacelike unit polarization, k.eps = 0
    WaveProfile wave;
};

struct LightConeBasis {
    FourVector k, kbar, eps, epsbar;
    CFourVector eps_plus, eps_minus; // (eps +- i epsbar)/sqrt(2)
};

// Completes (k, eps) to the null tetrad; throws naming the violated relation
// when k is not null or eps is not a unit spacelike vector orthogonal to k.
LightConeBasis lightcone_basis(const FourVector& k, const FourVector& eps);

// Decompose v on the basis via completeness and reassemble (test helper).
FourVector basis_reconstruct(const LightConeBasis& b, const FourVector& v);

struct ParticleParams {
    double m;
    double e;
    double alpha;
    double lambda; // 2*alpha*e

    ParticleParams(double mass, double charge);
    ParticleParams(double mass, double charge, double einbein);
};

struct ConstantUniform {
    FieldTensor F0;
};

struct PlaneWave {
    PlaneWaveProfile profile;
};

// Combined configuration, stored in the aligned frame: E and B of F0 lie
// along the wave direction, the basis is oriented so the magnetic
// decomposition coefficient B0 is <= 0, and E0 carries the sign of E.khat
// (the formulas are algebraic in it, so anti-parallel E is admitted).
struct Combined {
    FieldTensor F0;           // aligned-frame constant part
    PlaneWaveProfile profile; // aligned-frame wave
    LightConeBasis aligned;
    double E0 = 0.0;
    double B0 = 0.0;
    Matrix4 frame_transform = Matrix4::identity(); // input -> aligned coords
};

using FieldConfig = std::variant<ConstantUniform, PlaneWave, Combined>;

struct AlignResult {
    Matrix4 transform; // proper orthochronous, maps input frame coordinates
    double E0 = 0.0;   // signed electric coefficient along the wave direction
    double B0 = 0.0;   // <= 0 by choice of epsbar orientation
    LightConeBasis basis; // aligned-frame tetrad
};

// Finds the frame in which E and B of F0 are parallel to the (transformed)
// wave direction. Requires F0 non-null when nonzero and k inside the
// invariant plane of F0 (otherwise no exact alignment exists).
AlignResult align_frame(const FieldTensor& F0, const FourVector& k,
                        const std::optional<FourVector>& eps = std::nullopt);

// Assembles an aligned Combined config from input-frame data.
Combined make_combined(const FieldTensor& F0, const PlaneWaveProfile& profile);

FieldTensor field_at(const FieldConfig& config, const FourVector& x);

// Lorentz helpers. Matrices act on contravariant components, x' = L x.
bool is_proper_orthochronous(const Matrix4& L, double tol = 1e-12);
// Exact inverse g L^T g of a Lorentz matrix (no linear solve).
Matrix4 lorentz_inverse(const Matrix4& L);
FourVector lorentz_vec(const Matrix4& L, const FourVector& x);
FieldTensor lorentz_cov(const Matrix4& L, const FieldTensor& F);
Matrix4 boost_from_velocity(const std::array<double, 3>& v);
Matrix4 rotation_to_z(const std::array<double, 3>& dir);

} // namespace propkit
