#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fieldroad/complex_erfc.hpp"
#include "fieldroad/cubic.hpp"
#include "fieldroad/errors.hpp"
#include "fieldroad/phi.hpp"

namespace fieldroad {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrtPi = 1.77245385090551602730;

// Point X = (x, y) of the half-space, x tangential (length N-1), y >= 0 depth.
struct HalfSpacePoint {
    std::vector<double> x;
    double y = 0.0;
};

struct QuadratureConfig {
    double xi_max = 0.0;  // <= 0 means: choose from the Gaussian damping factor
    int panels = 4096;    // total panel budget for the adaptive subdivision
    int nodes_per_panel = 16;
    double tol = 1e-9;
    double graded_time_exponent = 2.0;
};

inline double gauss_kernel(double t, const std::vector<double>& x, double diffusivity,
                           int dim) {
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    const double four_dt = 4.0 * diffusivity * t;
    return std::pow(kPi * four_dt, -0.5 * dim) * std::exp(-r2 / four_dt);
}

inline double gauss_kernel_1d(double t, double x, double diffusivity) {
    const double four_dt = 4.0 * diffusivity * t;
    return std::exp(-x * x / four_dt) / std::sqrt(kPi * four_dt);
}

namespace detail {

// One-dimensional half-line kernel H_theta(t, y, omega); the full kernel is
// this times the (N-1)-dimensional tangential Gaussian.
inline double half_space_kernel_1d(double theta, double t, double y, double omega,
                                   double d) {
    const double g_minus = gauss_kernel_1d(t, y - omega, d);
    const double g_plus = gauss_kernel_1d(t, y + omega, d);
    if (theta == 0.0) return g_minus + g_plus;
    if (theta == 1.0) return g_minus - g_plus;
    const double a = theta / (d * (1.0 - theta));
    const double sdt = std::sqrt(d * t);
    const double arg = (2.0 * a * d * t + y + omega) / (2.0 * sdt);
    const double r = detail::erfcx_any(Complex(arg, 0.0)).real();
    return g_minus + g_plus - 2.0 * kSqrtPi * a * sdt * g_plus * r;
}

}  // namespace detail

inline double half_space_kernel(double theta, double t, const HalfSpacePoint& X,
                                const HalfSpacePoint& Z, double d, int dim) {
    std::vector<double> dx(X.x.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = X.x[i] - Z.x[i];
    const double tangential = gauss_kernel(t, dx, d, dim - 1);
    return tangential * detail::half_space_kernel_1d(theta, t, X.y, Z.y, d);
}

namespace detail {

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; symmetric).
inline constexpr std::array<double, 8> kGL16Nodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
inline constexpr std::array<double, 8> kGL16Weights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

// Integrand data shared by every x in a batched Lambda evaluation: Phi and the
// Gaussian damping depend on xi only, the cosine carries the x dependence.
struct LambdaPanelSums {
    // partial[k] = integral over the panel of Phi * exp(-d t xi^2) * cos(xi x_k)
    std::vector<double> partial;
};

template <class PhiFn>
inline void gl16_panel(double lo, double hi, const std::vector<double>& xs,
                       PhiFn&& phi_at, std::vector<double>& out) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    std::fill(out.begin(), out.end(), 0.0);
    for (int n = 0; n < 8; ++n) {
        for (double s : {-kGL16Nodes[n], kGL16Nodes[n]}) {
            const double xi = mid + half * s;
            const double f = phi_at(xi);
            for (std::size_t k = 0; k < xs.size(); ++k)
                out[k] += kGL16Weights[n] * f * std::cos(xi * xs[k]);
        }
    }
    for (double& v : out) v *= half;
}

}  // namespace detail

// Batched migration-kernel evaluation: Lambda(t, x_k, y) for all x_k at once,
// sharing the xi-dependent factor (the expensive part) across the batch.
inline std::vector<double> lambda_profile(double t, const std::vector<double>& xs,
                                          double y, const ModelParams& params,
                                          const Regime& regime,
                                          const QuadratureConfig& quad) {
    if (params.dim != 2) throw DomainError("lambda kernel is implemented for N = 2");
    if (t <= 0.0) throw DomainError("lambda kernel requires t > 0");
    double xi_max = quad.xi_max;
    if (xi_max <= 0.0) {
        if (t < 1e-3)
            throw QuadratureNotConverged(
                "lambda kernel: t < 1e-3 needs an explicit xi_max override", 1.0);
        xi_max = std::sqrt(16.0 * std::log(10.0) / (params.d * t));
    }

    const double dd = params.D - params.d;
    auto phi_at = [&](double xi) {
        const double delta = dd * xi * xi;
        return phi_compensated({t, y, delta}, params, regime) *
               std::exp(-params.d * t * xi * xi);
    };

    // Initial panel boundaries: ends plus the xi images of singular deltas,
    // where Phi has high curvature.
    std::vector<double> edges{0.0, xi_max};
    if (dd > 0.0) {
        for (double delta_s : regime.singular_deltas) {
            const double xi_s = std::sqrt(delta_s / dd);
            if (xi_s > 0.0 && xi_s < xi_max) edges.push_back(xi_s);
        }
    }
    std::sort(edges.begin(), edges.end());

    struct Panel {
        double lo, hi;
        std::vector<double> coarse;
    };
    std::vector<double> scratch(xs.size()), half_sum(xs.size());
    std::vector<Panel> work;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        Panel p{edges[i], edges[i + 1], std::vector<double>(xs.size())};
        detail::gl16_panel(p.lo, p.hi, xs, phi_at, p.coarse);
        work.push_back(std::move(p));
    }

    std::vector<double> total(xs.size(), 0.0);
    int panels_used = static_cast<int>(work.size());
    double achieved = 0.0;
    while (!work.empty()) {
        Panel p = std::move(work.back());
        work.pop_back();
        const double mid = 0.5 * (p.lo + p.hi);
        detail::gl16_panel(p.lo, mid, xs, phi_at, scratch);
        half_sum = scratch;
        Panel right{mid, p.hi, std::vector<double>(xs.size())};
        detail::gl16_panel(mid, p.hi, xs, phi_at, right.coarse);
        for (std::size_t k = 0; k < xs.size(); ++k) half_sum[k] += right.coarse[k];

        double scale = 1e-300;
        for (std::size_t k = 0; k < xs.size(); ++k)
            scale = std::max(scale, std::abs(total[k]) + std::abs(half_sum[k]));
        double err = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k)
            err = std::max(err, std::abs(half_sum[k] - p.coarse[k]));
        if (err <= quad.tol * scale || panels_used + 2 > quad.panels) {
            achieved = std::max(achieved, err / scale);
            if (err <= quad.tol * scale) {
                for (std::size_t k = 0; k < xs.size(); ++k) total[k] += half_sum[k];
                continue;
            }
            throw QuadratureNotConverged("lambda kernel panel budget exhausted",
                                         achieved);
        }
        panels_used += 2;
        Panel left{p.lo, mid, scratch};
        work.push_back(std::move(left));
        work.push_back(std::move(right));
    }

    const double prefactor =
        2.0 * std::exp(-y * y / (4.0 * params.d * t)) / (2.0 * kPi);
    for (double& v : total) v *= prefactor;
    return total;
}

inline double lambda_kernel(double t, double x, double y, const ModelParams& params,
                            const Regime& regime, const QuadratureConfig& quad) {
    return lambda_profile(t, {x}, y, params, regime, quad)[0];
}

}  // namespace fieldroad
