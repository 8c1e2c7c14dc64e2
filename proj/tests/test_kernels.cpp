#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fieldroad/kernels.hpp"
#include "oracles.hpp"

using fieldroad::HalfSpacePoint;
using fieldroad::ModelParams;
using fieldroad::QuadratureConfig;

namespace {

double gauss1(double t, double x, double diff) {
    return fieldroad::gauss_kernel_1d(t, x, diff);
}

double h1d(double theta, double t, double y, double omega, double d) {
    return fieldroad::detail::half_space_kernel_1d(theta, t, y, omega, d);
}

// Monte Carlo estimate of the 1-D half-space kernel, bin-averaged over
// [lo, lo+b): Brownian paths started at omega with Skorokhod reflection at 0
// (exact bridge-minimum sampling per step) and elastic killing weight
// exp(-A L) where L is the pushing process and A = theta/(d(1-theta)).
double mc_halfspace_bin(double theta, double t, double lo, double b,
                        double omega, double d, int npaths, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    const int nsteps = 8;
    const double var = 2.0 * d * (t / nsteps);
    const double A = theta / (d * (1.0 - theta));
    double acc = 0.0;
    for (int p = 0; p < npaths; ++p) {
        double x = omega, mn = omega;
        for (int s = 0; s < nsteps; ++s) {
            const double x1 = x + std::sqrt(var) * gauss(rng);
            const double bridge_min =
                0.5 * (x + x1 -
                       std::sqrt((x1 - x) * (x1 - x) -
                                 2.0 * var * std::log(unif(rng))));
            mn = std::min(mn, bridge_min);
            x = x1;
        }
        const double L = std::max(0.0, -mn);
        const double y = x + L;
        if (y >= lo && y < lo + b) acc += std::exp(-A * L);
    }
    return acc / (npaths * b);
}

}  // namespace

TEST_CASE("gauss kernel distinguished values") {
    CHECK(fieldroad::gauss_kernel(1.0 / (4.0 * M_PI), {0.0}, 1.0, 1) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fieldroad::gauss_kernel(1.0, {2.0, 0.0}, 1.0, 2) ==
          doctest::Approx(std::exp(-1.0) / (4.0 * M_PI)).epsilon(1e-14));
    CHECK(gauss1(1.0, 0.5, 2.0) ==
          doctest::Approx(fieldroad::gauss_kernel(1.0, {0.5}, 2.0, 1))
              .epsilon(1e-15));
}

TEST_CASE("gauss kernel has unit mass") {
    for (double t : {0.1, 1.0, 7.0})
        for (double diff : {0.5, 3.0}) {
            const double w = 12.0 * std::sqrt(diff * t);
            const int n = 4000;
            double mass1 = 0.0, mass2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double x = -w + 2.0 * w * (i + 0.5) / n;
                mass1 += gauss1(t, x, diff) * (2.0 * w / n);
            }
            CHECK(mass1 == doctest::Approx(1.0).epsilon(1e-8));
            // 2-d mass by tensorization of the 1-d factors
            for (int i = 0; i < n; ++i) {
                const double x = -w + 2.0 * w * (i + 0.5) / n;
                mass2 += gauss1(t, x, diff) * (2.0 * w / n);
            }
            CHECK(mass1 * mass2 == doctest::Approx(1.0).epsilon(1e-8));
        }
}

TEST_CASE("half-space kernel Neumann and Dirichlet image sums") {
    const double d = 1.3;
    for (double t : {0.2, 2.0})
        for (double y : {0.0, 0.5, 2.0})
            for (double w : {0.1, 1.5}) {
                const double g_minus = gauss1(t, y - w, d);
                const double g_plus = gauss1(t, y + w, d);
                CHECK(h1d(0.0, t, y, w, d) ==
                      doctest::Approx(g_minus + g_plus).epsilon(1e-13));
                CHECK(h1d(1.0, t, y, w, d) ==
                      doctest::Approx(g_minus - g_plus).epsilon(1e-13));
            }
    CHECK(h1d(1.0, 1.0, 0.0, 0.7, d) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("Robin kernel is sandwiched between Dirichlet and Neumann") {
    // the spec'd sandwich point
    CHECK(h1d(1.0, 1.0, 0.3, 0.3, 1.0) < h1d(0.5, 1.0, 0.3, 0.3, 1.0));
    CHECK(h1d(0.5, 1.0, 0.3, 0.3, 1.0) < h1d(0.0, 1.0, 0.3, 0.3, 1.0));
    for (double t : {0.3, 1.0, 4.0})
        for (double y : {0.05, 0.4, 1.5})
            for (double w : {0.1, 0.9})
                for (double theta : {0.2, 0.5, 0.8}) {
                    const double hm = h1d(theta, t, y, w, 1.0);
                    CHECK(hm > h1d(1.0, t, y, w, 1.0));
                    CHECK(hm < h1d(0.0, t, y, w, 1.0));
                    CHECK(hm >= 0.0);
                }
}

TEST_CASE("Robin kernel matches the reflected/absorbed walk oracle") {
    const double t = 1.0, d = 1.0, omega = 0.3, b = 0.1;
    const int npaths = 1000000;
    int bin_index = 0;
    for (double theta : {0.0, 0.5, 0.9}) {
        for (int k : {3, 8, 15}) {
            const double mc =
                mc_halfspace_bin(theta, t, k * b, b, omega, d, npaths,
                                 1234u + 7u * static_cast<unsigned>(k) +
                                     1000u * static_cast<unsigned>(10 * theta));
            double ref = 0.0;
            const int nq = 64;
            for (int q = 0; q < nq; ++q)
                ref += h1d(theta, t, (k + (q + 0.5) / nq) * b, omega, d) / nq;
            CHECK(std::abs(mc - ref) <= 1.5e-2 * ref);
            ++bin_index;
        }
    }
    CHECK(bin_index == 9);
}

TEST_CASE("Robin boundary condition residual") {
    const double h = 1e-5;
    for (double d : {0.7, 1.0, 2.5})
        for (double theta : {0.2, 0.5, 0.8})
            for (double t : {0.3, 1.0, 4.0})
                for (double w : {0.1, 0.5, 1.5}) {
                    // central difference through the analytic continuation
                    const double dy =
                        (h1d(theta, t, h, w, d) - h1d(theta, t, -h, w, d)) /
                        (2.0 * h);
                    const double residual =
                        theta * h1d(theta, t, 0.0, w, d) - (1.0 - theta) * d * dy;
                    const double scale = h1d(0.0, t, 0.0, w, d);
                    CHECK(std::abs(residual) <= 1e-5 * std::max(scale, 1e-6));
                }
}

TEST_CASE("theta limits recover Neumann and Dirichlet") {
    for (double t : {0.5, 2.0})
        for (double y : {0.0, 0.7})
            for (double w : {0.2, 1.0}) {
                CHECK(std::abs(h1d(1e-8, t, y, w, 1.0) - h1d(0.0, t, y, w, 1.0)) <=
                      1e-6);
                CHECK(std::abs(h1d(1.0 - 1e-8, t, y, w, 1.0) -
                               h1d(1.0, t, y, w, 1.0)) <= 1e-6);
            }
}

TEST_CASE("half-space kernels solve the heat equation") {
    const double ht = 1e-4, hx = 1e-4;
    for (double theta : {0.0, 0.5, 1.0})
        for (double t : {0.5, 2.0})
            for (double y : {0.4, 1.1}) {
                const double w = 0.6, d = 1.2;
                const double dt_term =
                    (h1d(theta, t + ht, y, w, d) - h1d(theta, t - ht, y, w, d)) /
                    (2.0 * ht);
                const double dyy = (h1d(theta, t, y + hx, w, d) -
                                    2.0 * h1d(theta, t, y, w, d) +
                                    h1d(theta, t, y - hx, w, d)) /
                                   (hx * hx);
                const double scale = std::max(1.0, std::abs(dyy));
                CHECK(std::abs(dt_term - d * dyy) <= 1e-4 * scale);
            }
}

TEST_CASE("2-d half-space kernel factorizes") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const HalfSpacePoint X{{0.7}, 0.4}, Z{{-0.2}, 1.1};
    const double got = fieldroad::half_space_kernel(0.5, 1.3, X, Z, p.d, 2);
    const double want =
        gauss1(1.3, X.x[0] - Z.x[0], p.d) * h1d(0.5, 1.3, X.y, Z.y, p.d);
    CHECK(got == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("lambda kernel evenness, positivity scale, and decay") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const auto regime = fieldroad::classify_regime(p);
    const QuadratureConfig quad;
    for (double x : {0.5, 2.0, 7.0}) {
        const double lp = fieldroad::lambda_kernel(5.0, x, 1.0, p, regime, quad);
        const double lm = fieldroad::lambda_kernel(5.0, -x, 1.0, p, regime, quad);
        CHECK(lp == lm);
    }
    const double l100 = fieldroad::lambda_kernel(100.0, 0.0, 0.0, p, regime, quad);
    const double l400 = fieldroad::lambda_kernel(400.0, 0.0, 0.0, p, regime, quad);
    CHECK(l400 < l100);
    CHECK(l100 > 0.0);
}

TEST_CASE("lambda quadrature: tolerance halving is converged") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const auto regime = fieldroad::classify_regime(p);
    QuadratureConfig quad;
    quad.tol = 1e-9;
    QuadratureConfig tight = quad;
    tight.tol = 0.5e-9;
    for (double t : {0.5, 5.0})
        for (double y : {0.0, 2.0}) {
            const double a = fieldroad::lambda_kernel(t, 1.0, y, p, regime, quad);
            const double b = fieldroad::lambda_kernel(t, 1.0, y, p, regime, tight);
            CHECK(std::abs(a - b) <= quad.tol * (1.0 + std::abs(a)));
        }
}

TEST_CASE("lambda profile agrees with pointwise evaluation") {
    const ModelParams p{1.0, 0.1, 1.0, 1.0};  // also exercises D < d
    const auto regime = fieldroad::classify_regime(p);
    const QuadratureConfig quad;
    const std::vector<double> xs = {0.0, 1.0, 3.5};
    const auto prof = fieldroad::lambda_profile(5.0, xs, 0.5, p, regime, quad);
    REQUIRE(prof.size() == xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double single =
            fieldroad::lambda_kernel(5.0, xs[i], 0.5, p, regime, quad);
        CHECK(prof[i] == doctest::Approx(single).epsilon(1e-12));
    }
}

TEST_CASE("lambda refuses tiny times unless xi_max is overridden") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const auto regime = fieldroad::classify_regime(p);
    QuadratureConfig quad;
    CHECK_THROWS_AS(
        (void)fieldroad::lambda_kernel(1e-4, 0.0, 0.0, p, regime, quad),
        fieldroad::QuadratureNotConverged);
    quad.xi_max = 600.0;
    CHECK(std::isfinite(fieldroad::lambda_kernel(1e-4, 0.0, 0.0, p, regime, quad)));
}

TEST_CASE("lambda reports achieved error when the panel budget is exhausted") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const auto regime = fieldroad::classify_regime(p);
    QuadratureConfig quad;
    quad.panels = 2;
    quad.tol = 1e-14;
    try {
        (void)fieldroad::lambda_kernel(0.01, 0.0, 0.0, p, regime, quad);
        FAIL("expected QuadratureNotConverged");
    } catch (const fieldroad::QuadratureNotConverged& e) {
        CHECK(e.achieved_error > 0.0);
    }
}
