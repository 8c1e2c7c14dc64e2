#pragma once

// Complementary error function on the complex plane and its scaled ratio
// R(z) = e^{z^2} Erfc(z), uniformly accurate on the closed right half-plane.
//
// Region scheme for R:
//   |z| <= 2.75   power series of the holomorphic continuation (long double
//                 accumulation; cancellation is still mild there),
//   2.75 < |z| < 6.5   rational expansion of the Faddeeva function w(iz)
//                 (Weideman-type, coefficients built once at startup),
//   |z| >= 6.5    asymptotic expansion, truncated at term < 1e-18 * sum.
// The boundaries are placed where adjacent methods agree to better than
// 1e-13 (checked by the test suite on overlap annuli).

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fieldroad/errors.hpp"

namespace fieldroad {

using Complex = std::complex<double>;

namespace detail {

using LComplex = std::complex<long double>;

inline constexpr double kSeriesRadius = 2.75;
inline constexpr double kAsymptoticRadius = 6.5;
inline constexpr int kSeriesCap = 200;

inline constexpr long double kSqrtPiL = 1.7724538509055160272981674833411452L;

// Continuation series: Erfc(z) = 1 - (2/sqrt(pi)) sum (-1)^k z^{2k+1} / ((2k+1) k!).
inline LComplex erfc_series(LComplex z) {
    const LComplex z2 = z * z;
    LComplex term = z;  // z^{2k+1} / k!
    LComplex sum = z;   // accumulating sum of term / (2k+1)
    for (int k = 1; k <= kSeriesCap; ++k) {
        term *= -z2 / static_cast<long double>(k);
        const LComplex contrib = term / static_cast<long double>(2 * k + 1);
        sum += contrib;
        if (std::abs(contrib) < 1e-18L * (std::abs(sum) + 1e-300L))
            return 1.0L - (2.0L / kSqrtPiL) * sum;
    }
    throw DomainError("erfc series did not converge within the term cap");
}

// Asymptotic expansion sqrt(pi) z R(z) ~ sum (-1)^n (2n-1)!! / (2 z^2)^n.
inline LComplex erfcx_asymptotic(LComplex z) {
    const LComplex inv2z2 = 0.5L / (z * z);
    LComplex term = 1.0L;
    LComplex sum = 1.0L;
    long double prev = 1.0L;
    for (int n = 1; n <= 60; ++n) {
        term *= -static_cast<long double>(2 * n - 1) * inv2z2;
        const long double mag = std::abs(term);
        if (mag > prev) break;  // optimal truncation reached
        sum += term;
        prev = mag;
        if (mag < 1e-18L * std::abs(sum)) break;
    }
    return sum / (kSqrtPiL * z);
}

// Weideman-style rational expansion of the Faddeeva function w(zeta),
// valid for Im(zeta) >= 0. R(z) = w(i z) covers Re(z) >= 0.
class FaddeevaRational {
public:
    static constexpr int kN = 48;

    FaddeevaRational() {
        const int m = 2 * kN;
        const int m2 = 2 * m;
        length_ = std::sqrt(static_cast<long double>(kN) / std::sqrt(2.0L));
        // Sampled function on the tangent grid, then a real DFT of the
        // half-sample-shifted sequence gives the polynomial coefficients.
        std::vector<long double> f(static_cast<std::size_t>(m2), 0.0L);
        for (int k = -m + 1; k <= m - 1; ++k) {
            const long double theta =
                static_cast<long double>(k) * std::numbers::pi_v<long double> /
                static_cast<long double>(m);
            const long double t = length_ * std::tan(theta / 2.0L);
            f[static_cast<std::size_t>(k + m)] =
                std::exp(-t * t) * (length_ * length_ + t * t);
        }
        for (int idx = 1; idx <= kN; ++idx) {
            long double acc = 0.0L;
            for (int j = 0; j < m2; ++j) {
                const int shifted = (j + m) % m2;
                const long double angle =
                    -2.0L * std::numbers::pi_v<long double> *
                    static_cast<long double>(j) * static_cast<long double>(idx) /
                    static_cast<long double>(m2);
                acc += f[static_cast<std::size_t>(shifted)] * std::cos(angle);
            }
            coeff_[static_cast<std::size_t>(idx - 1)] =
                acc / static_cast<long double>(m2);
        }
    }

    // w(zeta), Im(zeta) >= 0.
    LComplex operator()(LComplex zeta) const {
        const LComplex denom = length_ - LComplex(0.0L, 1.0L) * zeta;
        const LComplex big_z = (length_ + LComplex(0.0L, 1.0L) * zeta) / denom;
        LComplex p = 0.0L;
        for (int k = kN - 1; k >= 0; --k)
            p = p * big_z + coeff_[static_cast<std::size_t>(k)];
        return 2.0L * p / (denom * denom) + (1.0L / kSqrtPiL) / denom;
    }

private:
    long double length_ = 0.0L;
    std::array<long double, kN> coeff_{};
};

inline const FaddeevaRational& faddeeva_rational() {
    static const FaddeevaRational instance;
    return instance;
}

// R on the closed right half-plane with Im z >= 0.
inline LComplex erfcx_upper(LComplex z) {
    const long double r = std::abs(z);
    if (r <= kSeriesRadius) return std::exp(z * z) * erfc_series(z);
    if (r >= kAsymptoticRadius) return erfcx_asymptotic(z);
    return faddeeva_rational()(LComplex(0.0L, 1.0L) * z);
}

inline void check_finite(Complex z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw DomainError("non-finite complex argument");
}

/// R on the whole plane via the reflection R(z) = 2 e^{z^2} - R(-z).
/// Only the negative-delta branch of Phi ever needs Re z < 0; e^{z^2}
/// overflows there exactly where R itself does.
inline Complex erfcx_any(Complex z) {
    LComplex zl(std::abs(z.real()), std::abs(z.imag()));
    LComplex r = erfcx_upper(zl);
    if (z.real() < 0.0) r = 2.0L * std::exp(LComplex(z.real(), std::abs(z.imag())) *
                                            LComplex(z.real(), std::abs(z.imag()))) -
                            r;
    if (z.imag() < 0.0) r = std::conj(r);
    return {static_cast<double>(r.real()), static_cast<double>(r.imag())};
}

}  // namespace detail

/// Empirically frozen constants for the half-plane bounds
/// |R(z)| <= C/|z|, |R'(z)| <= C'/|z|^2, |R''(z)| <= C''/|z|^3
/// (grid scan over Re z >= 0, 1e-3 <= |z| <= 1e3, plus margin).
inline constexpr double kErfcRatioBoundC = 1.20;
inline constexpr double kErfcRatioBoundC1 = 1.50;
inline constexpr double kErfcRatioBoundC2 = 3.10;

/// Scaled ratio R(z) = e^{z^2} Erfc(z) for Re z >= 0.
inline Complex erfc_ratio(Complex z) {
    detail::check_finite(z);
    if (z.real() < 0.0)
        throw DomainError("erfc_ratio requires Re z >= 0");
    detail::LComplex zl(z.real(), std::abs(z.imag()));
    detail::LComplex r = detail::erfcx_upper(zl);
    if (z.imag() < 0.0) r = std::conj(r);
    return {static_cast<double>(r.real()), static_cast<double>(r.imag())};
}

/// Holomorphic continuation of Erfc; total on finite inputs.
inline Complex erfc(Complex z) {
    detail::check_finite(z);
    detail::LComplex zl(std::abs(z.real()), std::abs(z.imag()));
    detail::LComplex r;
    if (std::abs(zl) <= detail::kSeriesRadius) {
        r = detail::erfc_series(zl);
    } else {
        // Gamma(z) * R(z); the product underflows exactly where erfc does.
        r = std::exp(-zl * zl) * detail::erfcx_upper(zl);
    }
    if (z.real() < 0.0) r = 2.0L - r;
    if (z.imag() < 0.0) r = std::conj(r);
    return {static_cast<double>(r.real()), static_cast<double>(r.imag())};
}

struct ErfcRatioDerivs {
    Complex value;
    Complex first;
    Complex second;
};

/// (R, R', R'') from the exact recurrences
/// R'(z) = 2 z R(z) - 2/sqrt(pi),  R''(z) = 2 R(z) + 2 z R'(z).
inline ErfcRatioDerivs erfc_ratio_derivs(Complex z) {
    const Complex r = erfc_ratio(z);
    constexpr double kSqrtPi = 1.7724538509055160273;
    const Complex r1 = 2.0 * z * r - Complex(2.0 / kSqrtPi, 0.0);
    const Complex r2 = 2.0 * r + 2.0 * z * r1;
    return {r, r1, r2};
}

namespace detail {

/// Derivative chain from a given R value via the exact recurrence
/// R^{(n+1)} = 2 z R^{(n)} + 2 n R^{(n-1)}; returns R^{(0)} .. R^{(count-1)}.
inline std::vector<Complex> deriv_chain_from_value(Complex z, Complex value,
                                                   int count) {
    constexpr double kSqrtPi = 1.7724538509055160273;
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(count));
    if (count > 0) out.push_back(value);
    if (count > 1) out.push_back(2.0 * z * value - Complex(2.0 / kSqrtPi, 0.0));
    for (int n = 1; n + 1 < count; ++n)
        out.push_back(2.0 * z * out[static_cast<std::size_t>(n)] +
                      2.0 * static_cast<double>(n) *
                          out[static_cast<std::size_t>(n - 1)]);
    return out;
}

}  // namespace detail

/// Derivative chain R^{(0)} .. R^{(count-1)} on the right half-plane.
inline std::vector<Complex> erfc_ratio_deriv_chain(Complex z, int count) {
    return detail::deriv_chain_from_value(z, erfc_ratio(z), count);
}

}  // namespace fieldroad
