#include "propkit/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace propkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int levi4(int a, int b, int c, int d) {
    const int p[4] = {a, b, c, d};
    int sign = 1;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            if (p[i] == p[j]) return 0;
            if (p[i] > p[j]) sign = -sign;
        }
    return sign;
}

double metric_sign(int mu) { return mu == 0 ? 1.0 : -1.0; }

std::array<double, 3> cross3(const std::array<double, 3>& a,
                             const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm3(const std::array<double, 3>& a) { return std::sqrt(dot3(a, a)); }

} // namespace

std::array<double, 3> FieldTensor::electric() const {
    return {cov(0, 1), cov(0, 2), cov(0, 3)};
}

std::array<double, 3> FieldTensor::magnetic() const {
    return {-cov(2, 3), cov(1, 3), -cov(1, 2)};
}

double FieldTensor::max_abs() const {
    double best = 0.0;
    for (double v : f) best = std::max(best, std::abs(v));
    return best;
}

FieldTensor FieldTensor::operator+(const FieldTensor& o) const {
    FieldTensor r;
    for (int i = 0; i < 16; ++i) r.f[i] = f[i] + o.f[i];
    return r;
}

FieldTensor FieldTensor::operator-(const FieldTensor& o) const {
    FieldTensor r;
    for (int i = 0; i < 16; ++i) r.f[i] = f[i] - o.f[i];
    return r;
}

FieldTensor FieldTensor::operator*(double s) const {
    FieldTensor r;
    for (int i = 0; i < 16; ++i) r.f[i] = f[i] * s;
    return r;
}

FourVector FieldTensor::apply_mixed(const FourVector& v) const {
    FourVector r;
    for (int nu = 0; nu < 4; ++nu) r.c[0] += cov(0, nu) * v.c[nu];
    for (int mu = 1; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) r.c[mu] -= cov(mu, nu) * v.c[nu];
    return r;
}

FourVector flip_spatial(const FourVector& v) {
    return {v.c[0], -v.c[1], -v.c[2], -v.c[3]};
}

FieldTensor constant_from_EB(const std::array<double, 3>& E,
                             const std::array<double, 3>& B) {
    for (double v : E)
        if (!std::isfinite(v)) throw InvalidInput("non-finite E component");
    for (double v : B)
        if (!std::isfinite(v)) throw InvalidInput("non-finite B component");
    FieldTensor F;
    for (int i = 0; i < 3; ++i) {
        F.cov(0, i + 1) = E[i];
        F.cov(i + 1, 0) = -E[i];
    }
    F.cov(1, 2) = -B[2];
    F.cov(2, 1) = B[2];
    F.cov(1, 3) = B[1];
    F.cov(3, 1) = -B[1];
    F.cov(2, 3) = -B[0];
    F.cov(3, 2) = B[0];
    return F;
}

FieldTensor wedge_cov(const FourVector& k, const FourVector& eps) {
    const FourVector kl = flip_spatial(k);
    const FourVector el = flip_spatial(eps);
    FieldTensor r;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            r.cov(mu, nu) = kl.c[mu] * el.c[nu] - kl.c[nu] * el.c[mu];
    return r;
}

std::pair<double, double> invariants(const FieldTensor& F) {
    const FieldTensor G = dual(F);
    double i1 = 0.0, i2 = 0.0;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
            const double raise = metric_sign(mu) * metric_sign(nu);
            i1 += F.cov(mu, nu) * raise * F.cov(mu, nu);
            i2 += G.cov(mu, nu) * raise * F.cov(mu, nu);
        }
    return {i1, i2};
}

FieldTensor dual(const FieldTensor& F) {
    FieldTensor G;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double acc = 0.0;
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    int s = levi4(a, b, c, d);
                    if (s != 0) acc += 0.5 * s * F.cov(c, d);
                }
            // lower both indices of G^{ab}
            G.cov(a, b) = metric_sign(a) * metric_sign(b) * acc;
        }
    return G;
}

std::pair<double, double> secular_amplitudes(const FieldTensor& F0) {
    auto [i1, i2] = invariants(F0);
    // Null gate: invariants that vanish to rounding would otherwise leak
    // sqrt-of-epsilon amplitudes; crossed fields must report exactly (0, 0).
    const double fs = F0.max_abs();
    const double gate = 1e-12 * std::max(1.0, fs * fs);
    if (std::abs(i1) <= gate && std::abs(i2) <= gate) return {0.0, 0.0};
    const double s = std::hypot(i1, i2);
    const double e0 = 0.5 * std::sqrt(std::max(0.0, s - i1));
    const double b0 = -0.5 * std::sqrt(std::max(0.0, s + i1));
    return {e0, b0};
}

WaveProfile WaveProfile::linear(double E0) {
    if (!std::isfinite(E0)) throw InvalidInput("linear profile: E0 not finite");
    WaveProfile p;
    p.kind_ = ProfileKind::Linear;
    p.e0_ = E0;
    return p;
}

WaveProfile WaveProfile::sinusoidal(double E0, double omega, double phi0) {
    if (!(omega != 0.0) || !std::isfinite(omega) || !std::isfinite(E0) ||
        !std::isfinite(phi0))
        throw InvalidInput("sinusoidal profile: need finite E0, phi0 and "
                           "nonzero omega");
    WaveProfile p;
    p.kind_ = ProfileKind::Sinusoidal;
    p.e0_ = E0;
    p.omega_ = omega;
    p.phi0_ = phi0;
    return p;
}

WaveProfile WaveProfile::gaussian_pulse(double E0, double omega, double width) {
    if (!(width > 0.0) || !std::isfinite(width) || !std::isfinite(E0) ||
        !std::isfinite(omega))
        throw InvalidInput("gaussian-pulse profile: need finite E0, omega and "
                           "positive width");
    WaveProfile p;
    p.kind_ = ProfileKind::GaussianPulse;
    p.e0_ = E0;
    p.omega_ = omega;
    p.width_ = width;
    // Envelope below 1e-19 outside +-L: f saturates there.
    const double L = 9.5 * width;
    p.pulse_support_ = L;
    const double cycles = 2.0 * L * (std::abs(omega) + 1.0 / width) / (2.0 * M_PI);
    int panels = static_cast<int>(std::ceil(32.0 * std::max(1.0, cycles)));
    panels = std::min(panels, 1 << 15);
    panels = std::max(panels, 512);
    auto fp = [E0, omega, width, L](double t) {
        const double phi = t - L;
        return num::cplx(E0 * std::exp(-phi * phi / (2.0 * width * width)) *
                             std::cos(omega * phi),
                         0.0);
    };
    auto prefix = std::make_shared<num::PrefixIntegral>(fp, 2.0 * L, panels);
    p.pulse_f0_ = prefix->eval(L).real();
    p.pulse_f_left_ = -p.pulse_f0_;
    p.pulse_f_right_ = prefix->total().real() - p.pulse_f0_;
    p.pulse_ = std::move(prefix);
    return p;
}

WaveProfile WaveProfile::tabulated(std::vector<double> phi,
                                   std::vector<double> fprime) {
    if (phi.size() < 4 || phi.size() != fprime.size())
        throw InvalidInput("tabulated profile: need >= 4 (phi, fprime) rows");
    for (std::size_t i = 1; i < phi.size(); ++i)
        if (!(phi[i] > phi[i - 1]))
            throw InvalidInput("tabulated profile: phi must strictly increase");
    WaveProfile p;
    p.kind_ = ProfileKind::Tabulated;
    p.support_lo_ = phi.front();
    p.support_hi_ = phi.back();
    const double range = phi.back() - phi.front();
    p.tab_hint_ = M_PI * static_cast<double>(phi.size() - 1) / range;
    double amp = 0.0;
    for (double v : fprime) amp = std::max(amp, std::abs(v));
    p.e0_ = amp;
    auto spline =
        std::make_shared<num::CubicSpline>(std::move(phi), std::move(fprime));
    p.table_f0_ = spline->in_range(0.0) ? spline->antiderivative(0.0) : 0.0;
    p.table_ = std::move(spline);
    return p;
}

WaveProfile WaveProfile::tabulated_csv(const std::string& filename) {
    std::ifstream in(filename);
    if (!in)
        throw InvalidInput("tabulated profile: cannot open '" + filename + "'");
    std::string line;
    if (!std::getline(in, line))
        throw InvalidInput("tabulated profile: empty file '" + filename + "'");
    auto strip = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (strip(line) != "phi,fprime")
        throw InvalidInput("tabulated profile: header must be 'phi,fprime'");
    std::vector<double> phi, fp;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw InvalidInput("tabulated profile: line " +
                               std::to_string(lineno) + " has no comma");
        try {
            std::size_t used = 0;
            const std::string a = strip(line.substr(0, comma));
            const std::string b = strip(line.substr(comma + 1));
            phi.push_back(std::stod(a, &used));
            if (used != a.size()) throw std::invalid_argument(a);
            fp.push_back(std::stod(b, &used));
            if (used != b.size()) throw std::invalid_argument(b);
        } catch (const std::exception&) {
            throw InvalidInput("tabulated profile: cannot parse line " +
                               std::to_string(lineno));
        }
    }
    return tabulated(std::move(phi), std::move(fp));
}

double WaveProfile::f(double phi) const {
    switch (kind_) {
        case ProfileKind::Linear:
            return e0_ * phi;
        case ProfileKind::Sinusoidal:
            return e0_ / omega_ * std::sin(omega_ * phi + phi0_);
        case ProfileKind::GaussianPulse: {
            if (phi <= -pulse_support_) return pulse_f_left_;
            if (phi >= pulse_support_) return pulse_f_right_;
            return pulse_->eval(phi + pulse_support_).real() - pulse_f0_;
        }
        case ProfileKind::Tabulated:
            if (!table_->in_range(phi))
                throw InvalidInput(
                    "tabulated profile evaluated outside its support");
            return table_->antiderivative(phi) - table_f0_;
    }
    throw InvalidInput("unknown profile kind");
}

double WaveProfile::fprime(double phi) const {
    switch (kind_) {
        case ProfileKind::Linear:
            return e0_;
        case ProfileKind::Sinusoidal:
            return e0_ * std::cos(omega_ * phi + phi0_);
        case ProfileKind::GaussianPulse:
            return e0_ * std::exp(-phi * phi / (2.0 * width_ * width_)) *
                   std::cos(omega_ * phi);
        case ProfileKind::Tabulated:
            if (!table_->in_range(phi))
                throw InvalidInput(
                    "tabulated profile evaluated outside its support");
            return table_->eval(phi);
    }
    throw InvalidInput("unknown profile kind");
}

bool WaveProfile::is_identically_zero() const { return e0_ == 0.0; }

double WaveProfile::frequency_hint() const {
    switch (kind_) {
        case ProfileKind::Linear:
            return 0.0;
        case ProfileKind::Sinusoidal:
            return std::abs(omega_);
        case ProfileKind::GaussianPulse:
            return std::abs(omega_) + 1.0 / width_;
        case ProfileKind::Tabulated:
            return tab_hint_;
    }
    return 0.0;
}

std::pair<double, double> WaveProfile::support() const {
    if (kind_ == ProfileKind::Tabulated) return {support_lo_, support_hi_};
    return {-kInf, kInf};
}

LightConeBasis lightcone_basis(const FourVector& k, const FourVector& eps) {
    const double kscale = euclid_norm(k);
    if (kscale == 0.0) throw InvalidInput("lightcone basis: k is zero");
    if (!k.finite() || !eps.finite())
        throw InvalidInput("lightcone basis: non-finite input");
    const double kk = dot(k, k);
    if (std::abs(kk) > 1e-12 * kscale * kscale)
        throw InvalidInput("lightcone basis: k is not null, k.k = " +
                           std::to_string(kk));
    const double ee = dot(eps, eps);
    if (std::abs(ee + 1.0) > 1e-10)
        throw InvalidInput("lightcone basis: eps is not unit spacelike, "
                           "eps.eps = " + std::to_string(ee));
    const double ke = dot(k, eps);
    if (std::abs(ke) > 1e-10 * kscale)
        throw InvalidInput("lightcone basis: eps not orthogonal to k, "
                           "k.eps = " + std::to_string(ke));

    const double k0 = k.c[0];
    if (k0 == 0.0) throw InvalidInput("lightcone basis: k has zero energy");
    FourVector kbar0{k0, -k.c[1], -k.c[2], -k.c[3]};
    kbar0 = kbar0 * (1.0 / (2.0 * k0 * k0));
    const double gamma = dot(eps, kbar0);
    FourVector kbar = kbar0 - k * (0.5 * gamma * gamma) + eps * gamma;

    // epsbar^a = eps^{abcd} k_b kbar_c eps_d with eps^{0123} = +1; the result
    // is orthogonal to all three and spacelike.
    const FourVector kl = flip_spatial(k);
    const FourVector kbl = flip_spatial(kbar);
    const FourVector el = flip_spatial(eps);
    FourVector ebar;
    for (int a = 0; a < 4; ++a) {
        double acc = 0.0;
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    int s = levi4(a, b, c, d);
                    if (s != 0) acc += s * kl.c[b] * kbl.c[c] * el.c[d];
                }
        ebar.c[a] = acc;
    }
    const double n2 = -dot(ebar, ebar);
    if (!(n2 > 1e-10))
        throw NumericalFailure("lightcone basis: degenerate completion");
    ebar = ebar * (1.0 / std::sqrt(n2));

    LightConeBasis b;
    b.k = k;
    b.kbar = kbar;
    b.eps = eps;
    b.epsbar = ebar;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < 4; ++i) {
        b.eps_plus[i] = num::cplx(eps.c[i], ebar.c[i]) * inv_sqrt2;
        b.eps_minus[i] = num::cplx(eps.c[i], -ebar.c[i]) * inv_sqrt2;
    }
    return b;
}

FourVector basis_reconstruct(const LightConeBasis& b, const FourVector& v) {
    const double a1 = dot(b.kbar, v);
    const double a2 = dot(b.k, v);
    const double a3 = dot(b.eps, v);
    const double a4 = dot(b.epsbar, v);
    return b.k * a1 + b.kbar * a2 - b.eps * a3 - b.epsbar * a4;
}

ParticleParams::ParticleParams(double mass, double charge)
    : ParticleParams(mass, charge, 1.0 / (2.0 * mass)) {}

ParticleParams::ParticleParams(double mass, double charge, double einbein)
    : m(mass), e(charge), alpha(einbein), lambda(2.0 * einbein * charge) {
    if (!(m > 0.0) || !std::isfinite(m))
        throw InvalidInput("particle mass must be positive");
    if (!std::isfinite(e)) throw InvalidInput("particle charge not finite");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw InvalidInput("einbein alpha must be positive");
}

bool is_proper_orthochronous(const Matrix4& L, double tol) {
    const Matrix4 g = Matrix4::minkowski_metric();
    const Matrix4 resid = L.transpose() * g * L - g;
    if (resid.max_abs() > tol) return false;
    const num::cplx d = L.det();
    if (std::abs(d - num::cplx(1.0, 0.0)) > 1e-10) return false;
    return L(0, 0).real() > 0.0;
}

Matrix4 lorentz_inverse(const Matrix4& L) {
    const Matrix4 g = Matrix4::minkowski_metric();
    return g * L.transpose() * g;
}

FourVector lorentz_vec(const Matrix4& L, const FourVector& x) {
    return L.apply_real(x);
}

FieldTensor lorentz_cov(const Matrix4& L, const FieldTensor& F) {
    const Matrix4 g = Matrix4::minkowski_metric();
    Matrix4 Fm = Matrix4::from_real(F.f);
    // F' = (g L g) F (g L^T g), the covariant two-index transformation
    const Matrix4 A = g * L * g;
    const Matrix4 Fp = A * Fm * A.transpose();
    FieldTensor r;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            r.cov(mu, nu) = 0.5 * (Fp(mu, nu).real() - Fp(nu, mu).real());
    return r;
}

Matrix4 boost_from_velocity(const std::array<double, 3>& v) {
    const double v2 = dot3(v, v);
    if (!(v2 < 1.0))
        throw InvalidInput("boost velocity must satisfy |v| < 1");
    if (v2 == 0.0) return Matrix4::identity();
    const double gamma = 1.0 / std::sqrt(1.0 - v2);
    std::array<double, 16> L{};
    L[0] = gamma;
    for (int i = 0; i < 3; ++i) {
        L[0 * 4 + (i + 1)] = -gamma * v[i];
        L[(i + 1) * 4 + 0] = -gamma * v[i];
        for (int j = 0; j < 3; ++j)
            L[(i + 1) * 4 + (j + 1)] =
                (i == j ? 1.0 : 0.0) + (gamma - 1.0) * v[i] * v[j] / v2;
    }
    return Matrix4::from_real(L);
}

Matrix4 rotation_to_z(const std::array<double, 3>& dir) {
    const double n = norm3(dir);
    if (!(n > 0.0)) throw InvalidInput("rotation_to_z: zero direction");
    const std::array<double, 3> d = {dir[0] / n, dir[1] / n, dir[2] / n};
    const double c = d[2];
    if (c > 1.0 - 1e-15) return Matrix4::identity();
    std::array<double, 16> L{};
    L[0] = 1.0;
    if (c < -1.0 + 1e-15) {
        // pi rotation about x
        L[1 * 4 + 1] = 1.0;
        L[2 * 4 + 2] = -1.0;
        L[3 * 4 + 3] = -1.0;
        return Matrix4::from_real(L);
    }
    std::array<double, 3> axis = cross3(d, {0.0, 0.0, 1.0});
    const double s = norm3(axis);
    for (auto& a : axis) a /= s;
    // Rodrigues with cos = c, sin = s
    std::array<std::array<double, 3>, 3> R{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            R[i][j] = c * (i == j ? 1.0 : 0.0) + (1.0 - c) * axis[i] * axis[j];
    R[0][1] -= s * axis[2];
    R[0][2] += s * axis[1];
    R[1][0] += s * axis[2];
    R[1][2] -= s * axis[0];
    R[2][0] -= s * axis[1];
    R[2][1] += s * axis[0];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) L[(i + 1) * 4 + (j + 1)] = R[i][j];
    return Matrix4::from_real(L);
}

AlignResult align_frame(const FieldTensor& F0, const FourVector& k,
                        const std::optional<FourVector>& eps) {
    const double kscale = euclid_norm(k);
    if (kscale == 0.0 || std::abs(dot(k, k)) > 1e-12 * kscale * kscale)
        throw InvalidInput("align_frame: wave vector must be null and nonzero");

    const auto E = F0.electric();
    const auto B = F0.magnetic();
    const double scale2 = dot3(E, E) + dot3(B, B);

    Matrix4 boost = Matrix4::identity();
    if (scale2 > 0.0) {
        auto [i1, i2] = invariants(F0);
        if (std::abs(i1) <= 1e-10 * scale2 && std::abs(i2) <= 1e-10 * scale2)
            throw InvalidInput(
                "align_frame: no alignment frame exists (null constant field)");
        const auto S = cross3(E, B);
        const double s2 = dot3(S, S);
        if (s2 > 0.0) {
            const double disc =
                std::sqrt(std::max(0.0, scale2 * scale2 - 4.0 * s2));
            const double w = 0.5 * (scale2 + disc);
            boost = boost_from_velocity({S[0] / w, S[1] / w, S[2] / w});
        }
    }

    const FieldTensor Fb = lorentz_cov(boost, F0);
    const FourVector kb = lorentz_vec(boost, k);
    const std::array<double, 3> kbs = {kb.c[1], kb.c[2], kb.c[3]};
    const double kbn = norm3(kbs);
    if (kbn < 1e-14 * kscale)
        throw NumericalFailure("align_frame: transformed wave vector has "
                               "degenerate spatial part");

    if (scale2 > 0.0) {
        // In the drift frame E and B are parallel; their common axis must be
        // carried by k itself or no rotation can align them with the wave.
        const auto Eb = Fb.electric();
        const auto Bb = Fb.magnetic();
        const auto& n = dot3(Eb, Eb) >= dot3(Bb, Bb) ? Eb : Bb;
        const double nn = norm3(n);
        const auto cr = cross3(n, kbs);
        if (norm3(cr) > 1e-10 * nn * kbn)
            throw InvalidInput(
                "align_frame: k lies outside the invariant plane of F0; the "
                "constant field cannot be aligned with the wave direction");
    }

    const Matrix4 rot = rotation_to_z({kbs[0] / kbn, kbs[1] / kbn, kbs[2] / kbn});
    const Matrix4 L = rot * boost;

    const FieldTensor Fa = lorentz_cov(rot, Fb);
    const FourVector ka = lorentz_vec(rot, kb);

    FourVector eps_a;
    if (eps) {
        eps_a = lorentz_vec(L, *eps);
    } else {
        eps_a = FourVector{0.0, 1.0, 0.0, 0.0};
    }
    LightConeBasis basis = lightcone_basis(ka, eps_a);

    double Ec = 0.0, Bc = 0.0;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
            Ec += Fa.cov(mu, nu) * basis.kbar.c[mu] * basis.k.c[nu];
            Bc += Fa.cov(mu, nu) * basis.epsbar.c[mu] * basis.eps.c[nu];
        }
    if (Bc > 0.0) {
        basis.epsbar = basis.epsbar * (-1.0);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (int i = 0; i < 4; ++i) {
            basis.eps_plus[i] =
                num::cplx(basis.eps.c[i], basis.epsbar.c[i]) * inv_sqrt2;
            basis.eps_minus[i] =
                num::cplx(basis.eps.c[i], -basis.epsbar.c[i]) * inv_sqrt2;
        }
        Bc = -Bc;
    }

    // The recovered coefficients must reproduce the secular amplitudes and
    // the aligned tensor must contain nothing else.
    const auto [e0s, b0s] = secular_amplitudes(F0);
    const double amp_scale = std::max(1.0, std::sqrt(scale2));
    if (std::abs(std::abs(Ec) - e0s) > 1e-8 * amp_scale ||
        std::abs(std::abs(Bc) - std::abs(b0s)) > 1e-8 * amp_scale)
        throw NumericalFailure("align_frame: aligned coefficients disagree "
                               "with the Lorentz-invariant amplitudes");
    const FieldTensor recon =
        wedge_cov(basis.k, basis.kbar) * Ec -
        wedge_cov(basis.eps, basis.epsbar) * Bc;
    if ((recon - Fa).max_abs() > 1e-8 * amp_scale)
        throw NumericalFailure(
            "align_frame: aligned tensor has residual off-axis components");

    AlignResult out;
    out.transform = L;
    out.E0 = Ec;
    out.B0 = Bc;
    out.basis = basis;
    return out;
}

Combined make_combined(const FieldTensor& F0, const PlaneWaveProfile& profile) {
    AlignResult ar = align_frame(F0, profile.k, profile.eps);
    Combined c;
    c.F0 = lorentz_cov(ar.transform, F0);
    c.profile.k = ar.basis.k;
    c.profile.eps = ar.basis.eps;
    c.profile.wave = profile.wave;
    c.aligned = ar.basis;
    c.E0 = ar.E0;
    c.B0 = ar.B0;
    c.frame_transform = ar.transform;
    return c;
}

FieldTensor field_at(const FieldConfig& config, const FourVector& x) {
    if (const auto* cu = std::get_if<ConstantUniform>(&config)) return cu->F0;
    if (const auto* pw = std::get_if<PlaneWave>(&config)) {
        const double phi = dot(pw->profile.k, x);
        return wedge_cov(pw->profile.k, pw->profile.eps) *
               pw->profile.wave.fprime(phi);
    }
    // Combined stores aligned-frame data; x is an input-frame point, so the
    // evaluation runs in the aligned frame and the tensor is mapped back.
    const auto& cb = std::get<Combined>(config);
    const bool ident =
        (cb.frame_transform - Matrix4::identity()).max_abs() == 0.0;
    const FourVector xa =
        ident ? x : lorentz_vec(cb.frame_transform, x);
    const double phi = dot(cb.profile.k, xa);
    const FieldTensor Fa = cb.F0 + wedge_cov(cb.profile.k, cb.profile.eps) *
                                       cb.profile.wave.fprime(phi);
    return ident ? Fa : lorentz_cov(lorentz_inverse(cb.frame_transform), Fa);
}

} // namespace propkit
