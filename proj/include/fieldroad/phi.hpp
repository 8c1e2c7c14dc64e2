#pragma once

// Uniformly accurate evaluation of the compensated combination
//   Phi(t, xi, y) = a alpha Phi_alpha + b beta Phi_beta + c gamma Phi_gamma,
// where Phi_lambda = R((-2 lambda sqrt(d) t + y) / (2 sqrt(d t))) and
// (a, b, c) are the partial-fraction coefficients of the roots of P_delta.
// The naive combination loses all accuracy when roots merge; the branches
// below rewrite it through exact identities that stay conditioned:
//
//  - one real root + conjugate pair:  with q = (Phi_beta - Phi_alpha)/(beta - alpha),
//        Phi = Re q + Re(beta) * Im(q) / Im(beta),
//    where q is summed from the exact derivative chain of R when the roots
//    are close (this covers the triple-root collision including delta = delta_0),
//  - two merging real roots:  divided difference of psi_lambda =
//        lambda (Phi_lambda - Phi_far)/(lambda - far),
//    switching to the analytic psi' at the midpoint when the pair is tight,
//  - well-separated real roots: the direct (a, b, c) combination.

#include <cmath>
#include <complex>

#include "fieldroad/cubic.hpp"

namespace fieldroad {

/// Evaluation point of the compensated combination. delta = (D - d)|xi|^2
/// when D > d; negative delta (the D < d case) flows through the same code.
struct PhiEvalPoint {
    double t;      // > 0
    double y;      // >= 0
    double delta;
};

/// Phi_lambda = R((-2 lambda sqrt(d) t + y) / (2 sqrt(d t))).
inline Complex phi_bullet(double t, double y, double d, Complex lambda) {
    const double sqrt_t = std::sqrt(t);
    const Complex z = -lambda * sqrt_t + y / (2.0 * std::sqrt(d * t));
    return detail::erfcx_any(z);
}

namespace detail {

struct PhiFrame {
    double sqrt_t;
    double y_term;  // y / (2 sqrt(d t))
    Complex z(Complex lambda) const { return -lambda * sqrt_t + y_term; }
};

// psi_lambda = lambda (Phi_lambda - Phi_far) / (lambda - far).
inline Complex psi(const PhiFrame& f, Complex lambda, Complex far,
                   Complex phi_far) {
    return lambda * (erfcx_any(f.z(lambda)) - phi_far) / (lambda - far);
}

// Analytic derivative of psi in lambda.
inline Complex psi_prime(const PhiFrame& f, Complex lambda, Complex far,
                         Complex phi_far) {
    const auto chain = deriv_chain_from_value(f.z(lambda), erfcx_any(f.z(lambda)), 2);
    const Complex dl = lambda - far;
    const Complex diff = chain[0] - phi_far;
    const Complex dphi = -f.sqrt_t * chain[1];  // d Phi / d lambda
    return diff / dl + lambda * dphi / dl - lambda * diff / (dl * dl);
}

// Divided difference (psi(l1) - psi(l2)) / (l1 - l2), stable for any gap.
inline Complex psi_divided_difference(const PhiFrame& f, Complex l1, Complex l2,
                                      Complex far) {
    const Complex phi_far = erfcx_any(f.z(far));
    const double scale = 1.0 + std::abs(l1) + std::abs(l2);
    if (std::abs(l1 - l2) < 1e-4 * scale)
        return psi_prime(f, 0.5 * (l1 + l2), far, phi_far);
    return (psi(f, l1, far, phi_far) - psi(f, l2, far, phi_far)) / (l1 - l2);
}

// Conjugate-pair path: alpha real, gamma = conj(beta). Exact identity
//   Phi = Re q + Re(beta) * Im(q)/Im(beta),  q = (Phi_beta - Phi_alpha)/(beta - alpha).
// Im(q)/Im(beta) is produced without dividing by the vanishing Im(beta):
// each power w^k of w = beta - alpha has Im(w^k) divisible by Im(beta).
inline double phi_conjugate_pair(const PhiFrame& f, double alpha, Complex beta) {
    const Complex w = beta - alpha;
    const double eps_i = beta.imag();

    const Complex za = f.z(alpha);
    // Taylor terms behave like (2 |z| step)^k / k! with step = sqrt(t)|w|;
    // demand that product stay <= 1 so 48 terms are plenty.
    if (f.sqrt_t * std::abs(w) * (1.0 + 2.0 * std::abs(za)) <= 1.0) {
        // Taylor sum of q around the real root from the derivative chain.
        constexpr int kMaxDerivs = 48;
        const auto derivs =
            deriv_chain_from_value(za, erfcx_any(za), kMaxDerivs + 1);
        double q_re = 0.0;
        double q_im_over_eps = 0.0;
        // w^k tracked as (re_k) + i * eps_i * (p_k).
        double re_k = 1.0, p_k = 0.0;
        double factorial = 1.0;  // (k+1)!
        const double w_re = w.real();
        for (int k = 0; k < kMaxDerivs; ++k) {
            factorial *= static_cast<double>(k + 1);
            // Phi^{(k+1)}(alpha) = (-sqrt_t)^{k+1} R^{(k+1)}(z(alpha)), real.
            const double sign = (k % 2 == 0) ? -1.0 : 1.0;
            const double phi_deriv =
                sign * std::pow(f.sqrt_t, k + 1) *
                derivs[static_cast<std::size_t>(k + 1)].real();
            const double c = phi_deriv / factorial;
            q_re += c * re_k;
            q_im_over_eps += c * p_k;
            const double next_re = re_k * w_re - (eps_i * p_k) * eps_i;
            const double next_p = re_k + p_k * w_re;
            re_k = next_re;
            p_k = next_p;
            if (std::abs(c) *
                    (std::abs(re_k) + std::abs(p_k) * (1.0 + std::abs(beta))) <
                1e-17 * (std::abs(q_re) + std::abs(beta.real() * q_im_over_eps) +
                         1e-300))
                break;
        }
        return q_re + beta.real() * q_im_over_eps;
    }

    if (std::abs(eps_i) >= 1e-5 * (1.0 + std::abs(beta))) {
        const Complex q =
            (erfcx_any(f.z(beta)) - erfcx_any(f.z(Complex(alpha, 0.0)))) / w;
        return q.real() + beta.real() * q.imag() / eps_i;
    }

    // beta and gamma nearly merged on the real axis while far from alpha:
    // treat (beta, gamma) as the merging pair with alpha as the far root.
    return psi_prime(f, Complex(beta.real(), 0.0), Complex(alpha, 0.0),
                     erfcx_any(f.z(Complex(alpha, 0.0))))
        .real();
}

}  // namespace detail

/// The compensated combination, projected to a real value. The regime must
/// come from the same params; its guard intervals force the merging branches
/// even while roots are still numerically distinct.
inline double phi_compensated(const PhiEvalPoint& pt, const ModelParams& params,
                              const Regime& regime) {
    const RootTriple roots = solve_p_delta(params, pt.delta);
    const detail::PhiFrame frame{std::sqrt(pt.t),
                                 pt.y / (2.0 * std::sqrt(params.d * pt.t))};

    if (roots.kind == RootKind::OneRealConjugatePair)
        return detail::phi_conjugate_pair(frame, roots.alpha.real(), roots.beta);
    if (roots.kind == RootKind::TripleRoot)
        return detail::phi_conjugate_pair(frame, roots.alpha.real(),
                                          roots.beta);

    // All roots real (simple or double). Pick the closest pair.
    const auto rs = roots.all();
    int i1 = 0, i2 = 1;
    double best = std::abs(rs[0] - rs[1]);
    if (std::abs(rs[0] - rs[2]) < best) { best = std::abs(rs[0] - rs[2]); i1 = 0; i2 = 2; }
    if (std::abs(rs[1] - rs[2]) < best) { best = std::abs(rs[1] - rs[2]); i1 = 1; i2 = 2; }
    const int ifar = 3 - i1 - i2;

    const double scale = 1.0 + std::abs(rs[0]) + std::abs(rs[1]) + std::abs(rs[2]);
    const bool guarded = pt.delta >= 0.0 && regime.in_guard(pt.delta);

    if (!guarded && best > 1e-5 * scale &&
        roots.kind == RootKind::ThreeRealSimple) {
        const auto pf = partial_fraction_coeffs(roots, 1e-9 * scale);
        const Complex combo =
            pf.a * roots.alpha * detail::erfcx_any(frame.z(roots.alpha)) +
            pf.b * roots.beta * detail::erfcx_any(frame.z(roots.beta)) +
            pf.c * roots.gamma * detail::erfcx_any(frame.z(roots.gamma));
        return combo.real();
    }

    return detail::psi_divided_difference(frame, rs[static_cast<std::size_t>(i1)],
                                          rs[static_cast<std::size_t>(i2)],
                                          rs[static_cast<std::size_t>(ifar)])
        .real();
}

/// Grid maximum of |phi_compensated|; the empirical S(t) of the L-infinity
/// control used by the acceptance tests.
inline double sup_phi_scan(double t, const ModelParams& params,
                           const Regime& regime,
                           const std::vector<double>& delta_grid,
                           const std::vector<double>& y_grid) {
    double sup = 0.0;
    for (double delta : delta_grid)
        for (double y : y_grid)
            sup = std::max(sup,
                           std::abs(phi_compensated({t, y, delta}, params, regime)));
    return sup;
}

inline double sup_phi_scan(double t, const ModelParams& params,
                           const std::vector<double>& delta_grid,
                           const std::vector<double>& y_grid) {
    return sup_phi_scan(t, params, classify_regime(params), delta_grid, y_grid);
}

}  // namespace fieldroad
