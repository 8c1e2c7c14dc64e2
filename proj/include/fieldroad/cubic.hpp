#pragma once

// Roots and regime classification of the delta-indexed cubic
//   P_delta(s) = s^3 + (nu/sqrt(d)) s^2 + (mu + delta) s + nu*delta/sqrt(d),
// whose roots parametrize the Laplace-domain denominator of the migration
// kernel. Includes the discriminant, the singular delta values where roots
// merge, and the partial-fraction coefficients (a, b, c).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "fieldroad/complex_erfc.hpp"
#include "fieldroad/errors.hpp"

namespace fieldroad {

/// Physical constants of the field-road system and derived quantities.
struct ModelParams {
    double d;    // field diffusivity
    double D;    // road diffusivity
    double mu;   // road -> field exchange rate
    double nu;   // field -> road exchange rate
    int dim;     // ambient dimension N

    ModelParams(double d_, double D_, double mu_, double nu_, int dim_ = 2)
        : d(d_), D(D_), mu(mu_), nu(nu_), dim(dim_) {
        if (!(d > 0.0) || !(D > 0.0) || !(mu > 0.0) || !(nu > 0.0))
            throw DomainError("ModelParams: rates and diffusivities must be positive");
        if (D == d)
            throw DomainError("ModelParams: the D = d case is not supported");
        if (dim < 2) throw DomainError("ModelParams: dimension must be >= 2");
    }

    double A() const { return nu / d; }
    double B() const { return mu / d; }
    double theta() const { return nu / (1.0 + nu); }
    /// Coefficient of s^2 in P_delta: A*sqrt(d) = nu/sqrt(d).
    double a_sqrt_d() const { return nu / std::sqrt(d); }
};

enum class RootKind { ThreeRealSimple, OneRealConjugatePair, DoubleRoot, TripleRoot };

/// The three complex roots of P_delta with multiplicity metadata.
/// When kind = OneRealConjugatePair: alpha real, Im beta > 0, gamma = conj(beta).
/// When kind = DoubleRoot: alpha is the simple root, beta ~ gamma the pair.
struct RootTriple {
    Complex alpha;
    Complex beta;
    Complex gamma;
    RootKind kind;
    double delta;

    std::array<Complex, 3> all() const { return {alpha, beta, gamma}; }

    double min_pair_distance() const {
        return std::min({std::abs(alpha - beta), std::abs(alpha - gamma),
                         std::abs(beta - gamma)});
    }
};

enum class RegimeKind { SimpleOnly, TripleAt, DoubleTwice, DoubleOnce };

/// Classification of the (mu, nu, d) parameter point: which delta values
/// produce multiple roots, the half-width of the guard intervals around
/// them, and the measured root separation outside those intervals.
struct Regime {
    RegimeKind kind;
    std::vector<double> singular_deltas;  // sorted ascending
    double guard_radius;                  // eta of the merging lemmas (0 if no guard)
    double separation;                    // measured epsilon over the complement set

    bool in_guard(double delta) const {
        for (double s : singular_deltas)
            if (std::abs(delta - s) < guard_radius) return true;
        return false;
    }
};

/// Discriminant of P_delta:
///   18 A^2 d (mu+delta) delta - 4 A^4 d^2 delta + A^2 d (mu+delta)^2
///   - 4 (mu+delta)^3 - 27 A^2 d delta^2.
/// Zero iff P_delta has a multiple root.
inline double discriminant(const ModelParams& p, double delta) {
    const double A2d = p.nu * p.nu / p.d;  // (A sqrt(d))^2
    const double m = p.mu + delta;
    return 18.0 * A2d * m * delta - 4.0 * A2d * A2d * delta + A2d * m * m -
           4.0 * m * m * m - 27.0 * A2d * delta * delta;
}

namespace detail {

/// Magnitude scale of the discriminant terms, for relative zero tests.
inline double discriminant_scale(const ModelParams& p, double delta) {
    const double A2d = p.nu * p.nu / p.d;
    const double m = std::abs(p.mu + delta);
    const double ad = std::abs(delta);
    return 18.0 * A2d * m * ad + 4.0 * A2d * A2d * ad + A2d * m * m +
           4.0 * m * m * m + 27.0 * A2d * ad * ad;
}

inline Complex newton_polish(Complex root, double b, double c, double e) {
    for (int it = 0; it < 2; ++it) {
        const Complex p = ((root + b) * root + c) * root + e;
        const Complex dp = (3.0 * root + 2.0 * b) * root + c;
        if (std::abs(dp) < 1e-8 * (1.0 + std::abs(root) * std::abs(root)))
            break;  // near a multiple root; Newton would amplify noise
        root -= p / dp;
    }
    return root;
}

}  // namespace detail

/// Roots of P_delta. Accepts any finite delta (negative values arise on the
/// D < d branch); the regime lemmas only apply for delta >= 0.
inline RootTriple solve_p_delta(const ModelParams& params, double delta) {
    const double b = params.a_sqrt_d();           // s^2 coefficient
    const double c = params.mu + delta;           // s coefficient
    const double e = params.a_sqrt_d() * delta;   // constant term

    // Depressed form t^3 + p t + q with s = t - b/3.
    const double shift = b / 3.0;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + e;

    const double disc = discriminant(params, delta);
    const double scale = detail::discriminant_scale(params, delta);
    const bool disc_zero = std::abs(disc) <= 1e-12 * scale;

    std::array<Complex, 3> roots;
    if (disc_zero && std::abs(p) <= 1e-8 * (1.0 + b * b)) {
        roots.fill(Complex(-shift, 0.0));
    } else if (disc_zero) {
        const double dbl = -1.5 * q / p;
        const double simple = 3.0 * q / p;
        roots = {Complex(simple - shift, 0.0), Complex(dbl - shift, 0.0),
                 Complex(dbl - shift, 0.0)};
    } else if (disc > 0.0) {
        // Three distinct real roots (trigonometric branch).
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        constexpr double k2pi3 = 2.0943951023931953;
        for (int k = 0; k < 3; ++k)
            roots[static_cast<std::size_t>(k)] =
                Complex(m * std::cos(theta - k2pi3 * k) - shift, 0.0);
    } else {
        // One real root and a conjugate pair (Cardano).
        const double sq = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
        const double u = std::cbrt(-q / 2.0 + (q >= 0.0 ? -sq : sq));
        const double v = (u != 0.0) ? -p / (3.0 * u) : 0.0;
        const double t_real = u + v;
        const double re_pair = -t_real / 2.0;
        const double im_pair = std::sqrt(3.0) / 2.0 * std::abs(u - v);
        roots = {Complex(t_real - shift, 0.0),
                 Complex(re_pair - shift, im_pair),
                 Complex(re_pair - shift, -im_pair)};
    }

    for (auto& r : roots) r = detail::newton_polish(r, b, c, e);

    RootTriple out;
    out.delta = delta;

    const double merge_tol =
        1e-7 * (1.0 + std::abs(roots[0]) + std::abs(roots[1]) + std::abs(roots[2]));
    const auto close = [&](const Complex& x, const Complex& y) {
        return std::abs(x - y) < merge_tol;
    };

    if (close(roots[0], roots[1]) && close(roots[1], roots[2]) &&
        close(roots[0], roots[2])) {
        out.kind = RootKind::TripleRoot;
        out.alpha = out.beta = out.gamma = roots[0];
    } else if (disc_zero || close(roots[0], roots[1]) ||
               close(roots[1], roots[2]) || close(roots[0], roots[2])) {
        out.kind = RootKind::DoubleRoot;
        // Simple root in alpha, the merged pair in beta/gamma.
        if (close(roots[1], roots[2])) {
            out.alpha = roots[0]; out.beta = roots[1]; out.gamma = roots[2];
        } else if (close(roots[0], roots[2])) {
            out.alpha = roots[1]; out.beta = roots[0]; out.gamma = roots[2];
        } else {
            out.alpha = roots[2]; out.beta = roots[0]; out.gamma = roots[1];
        }
    } else if (disc > 0.0) {
        out.kind = RootKind::ThreeRealSimple;
        std::sort(roots.begin(), roots.end(),
                  [](const Complex& x, const Complex& y) { return x.real() < y.real(); });
        out.alpha = roots[0]; out.beta = roots[1]; out.gamma = roots[2];
    } else {
        out.kind = RootKind::OneRealConjugatePair;
        out.alpha = Complex(roots[0].real(), 0.0);
        out.beta = (roots[1].imag() > 0.0) ? roots[1] : roots[2];
        out.gamma = std::conj(out.beta);
    }
    return out;
}

namespace detail {

/// Bisection of the discriminant sign change bracketed in [lo, hi].
inline double bisect_discriminant(const ModelParams& p, double lo, double hi) {
    double flo = discriminant(p, lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= 1e-12 * (1.0 + std::abs(mid))) return mid;
        const double fm = discriminant(p, mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Sign-change scan of the discriminant over [0, delta_max].
inline std::vector<double> singular_delta_scan(const ModelParams& p,
                                               double delta_max) {
    std::vector<double> found;
    const int n = 8000;
    double prev = discriminant(p, 0.0);
    double prev_delta = 0.0;
    if (prev == 0.0) found.push_back(0.0);
    for (int i = 1; i <= n; ++i) {
        const double delta = delta_max * static_cast<double>(i) / n;
        const double cur = discriminant(p, delta);
        if ((prev < 0.0 && cur >= 0.0) || (prev > 0.0 && cur <= 0.0))
            found.push_back(bisect_discriminant(p, prev_delta, delta));
        prev = cur;
        prev_delta = delta;
    }
    return found;
}

/// Minimum pairwise root distance over a delta grid avoiding guard intervals.
inline double measure_separation(const ModelParams& p,
                                 const std::vector<double>& singular,
                                 double guard, double delta_max) {
    double eps = std::numeric_limits<double>::infinity();
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double delta = delta_max * static_cast<double>(i) / n;
        bool guarded = false;
        for (double s : singular)
            if (std::abs(delta - s) < guard) guarded = true;
        if (guarded) continue;
        eps = std::min(eps, solve_p_delta(p, delta).min_pair_distance());
    }
    return eps;
}

}  // namespace detail

/// Regime of the (mu, nu, d) point against the thresholds 8 A^2 d / 27 and
/// A^2 d / 4, with the singular delta values solved from the discriminant.
inline Regime classify_regime(const ModelParams& params) {
    const double A2d = params.nu * params.nu / params.d;
    const double thr_triple = 8.0 * A2d / 27.0;
    const double thr_double = A2d / 4.0;

    const bool at_triple = params.mu == thr_triple;
    if (!at_triple && std::abs(params.mu - thr_triple) <= 1e-12 * thr_triple)
        throw AmbiguousRegime("mu indistinguishable from the triple-root threshold");
    if (params.mu != thr_double &&
        std::abs(params.mu - thr_double) <= 1e-12 * thr_double)
        throw AmbiguousRegime("mu indistinguishable from the double-root threshold");

    Regime regime;
    const double delta_max = 10.0 * (A2d + params.mu);

    if (at_triple) {
        regime.kind = RegimeKind::TripleAt;
        regime.singular_deltas = {A2d / 27.0};
        regime.guard_radius = A2d / 54.0;
    } else if (params.mu > thr_triple) {
        regime.kind = RegimeKind::SimpleOnly;
        regime.guard_radius = 0.0;
    } else {
        auto singular = detail::singular_delta_scan(params, delta_max);
        if (params.mu >= thr_double) {
            regime.kind = RegimeKind::DoubleTwice;
            if (singular.size() != 2)
                throw ConvergenceError("expected two singular delta values");
            regime.singular_deltas = singular;
            regime.guard_radius = 0.5 * (singular[1] - singular[0]);
        } else {
            regime.kind = RegimeKind::DoubleOnce;
            if (singular.size() != 1)
                throw ConvergenceError("expected one singular delta value");
            regime.singular_deltas = singular;
            regime.guard_radius = 0.5 * singular[0];
        }
    }
    regime.separation = detail::measure_separation(
        params, regime.singular_deltas, regime.guard_radius, delta_max);
    return regime;
}

struct PartialFractionCoeffs {
    Complex a;
    Complex b;
    Complex c;
};

/// a = 1/((alpha-beta)(alpha-gamma)) and cyclic. Requires all pairwise root
/// distances above the caller's merge threshold; otherwise the compensated
/// Phi path must be used instead.
inline PartialFractionCoeffs partial_fraction_coeffs(const RootTriple& roots,
                                                     double merge_threshold) {
    if (roots.min_pair_distance() <= merge_threshold)
        throw MergeTooClose("roots too close for direct partial fractions");
    const Complex ab = roots.alpha - roots.beta;
    const Complex ag = roots.alpha - roots.gamma;
    const Complex bg = roots.beta - roots.gamma;
    return {1.0 / (ab * ag), 1.0 / (-ab * bg), 1.0 / (ag * bg)};
}

}  // namespace fieldroad
