#pragma once

// Shared test utilities: a deterministic splitmix64 generator (each test
// seeds its own), random field/endpoint draws mirroring the library's
// documented domains, and a Taylor-series matrix exponential used as an
// independent oracle against the production scaled-series implementations.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

#include "propkit/fields.hpp"
#include "propkit/minkowski.hpp"

namespace testsup {

using propkit::FieldTensor;
using propkit::FourVector;
using propkit::Matrix4;

struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53);
    }
    int pick(int n) {
        return static_cast<int>(next() % static_cast<std::uint64_t>(n));
    }
};

inline FourVector rand_vec(Rng& g, double lo, double hi) {
    return {g.uniform(lo, hi), g.uniform(lo, hi), g.uniform(lo, hi),
            g.uniform(lo, hi)};
}

inline std::array<double, 3> rand_unit3(Rng& g) {
    for (;;) {
        std::array<double, 3> v{g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0),
                                g.uniform(-1.0, 1.0)};
        const double n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if (n2 > 0.05 && n2 <= 1.0) {
            const double n = std::sqrt(n2);
            return {v[0] / n, v[1] / n, v[2] / n};
        }
    }
}

inline FieldTensor rand_EB(Rng& g, double amp) {
    return propkit::constant_from_EB(
        {g.uniform(-amp, amp), g.uniform(-amp, amp), g.uniform(-amp, amp)},
        {g.uniform(-amp, amp), g.uniform(-amp, amp), g.uniform(-amp, amp)});
}

struct NullPair {
    FourVector k, eps;
};

// Null wave vector plus orthogonal unit polarization.
inline NullPair rand_null_pair(Rng& g) {
    const std::array<double, 3> n = rand_unit3(g);
    const double w = g.uniform(0.5, 1.8);
    const FourVector k{w, w * n[0], w * n[1], w * n[2]};
    for (;;) {
        const std::array<double, 3> u = rand_unit3(g);
        std::array<double, 3> e{};
        const double un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
        double n2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            e[i] = u[i] - un * n[i];
            n2 += e[i] * e[i];
        }
        if (n2 < 0.05) continue;
        const double nn = std::sqrt(n2);
        return {k, FourVector{0.0, e[0] / nn, e[1] / nn, e[2] / nn}};
    }
}

// Plain Taylor series with scaling and repeated squaring; independent of the
// production phi1-based route.
inline Matrix4 expm_ref(const Matrix4& X) {
    int squarings = 0;
    Matrix4 S = X;
    while (S.norm_inf() > 0.25) {
        S = S * 0.5;
        ++squarings;
    }
    Matrix4 sum = Matrix4::identity();
    Matrix4 term = Matrix4::identity();
    for (int n = 1; n <= 24; ++n) {
        term = term * S * (1.0 / n);
        sum = sum + term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

inline double max_abs_diff(const Matrix4& A, const Matrix4& B) {
    return (A - B).max_abs();
}

} // namespace testsup
