#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fieldroad/fd_solver.hpp"
#include "fieldroad/semi_analytic.hpp"
#include "oracles.hpp"

using fieldroad::DataSpec;
using fieldroad::HalfSpacePoint;
using fieldroad::InitialData;
using fieldroad::ModelParams;
using fieldroad::QuadratureConfig;
using fieldroad::SimConfig;
using fieldroad::SimState;

namespace {

InitialData box_data(double x1, double x2, double y1, double y2, double h) {
    DataSpec spec;
    spec.boxes.push_back({x1, x2, y1, y2, 1.0});
    return fieldroad::rasterize(spec, h);
}

InitialData interval_data(double x1, double x2, double h) {
    DataSpec spec;
    spec.intervals.push_back({x1, x2, 1.0});
    return fieldroad::rasterize(spec, h);
}

double grid_mass_2d(const fieldroad::ScalarField2D& f) {
    double m = 0.0;
    for (double x : f.values) m += x;
    return m * f.dx * f.dy;
}

void step_to(SimState& st, const SimConfig& cfg, double t) {
    SimState scratch;
    const auto n = static_cast<long>(std::ceil(t / cfg.dt() - 1e-9));
    for (long k = 0; k < n; ++k) fieldroad::step_inplace(st, cfg, scratch);
}

}  // namespace

TEST_CASE("rasterized indicators carry the exact mass") {
    const InitialData box = box_data(-10.0, 10.0, 10.0, 30.0, 0.5);
    CHECK(grid_mass_2d(box.v0) == doctest::Approx(400.0).epsilon(1e-12));
    // a box leaning on the road keeps its full first row (the y = 0 node
    // stands for the half-cell [0, h/2]), so its mass gains w * h/2
    const InitialData road_box = box_data(-5.0, 5.0, 0.0, 5.0, 0.5);
    CHECK(grid_mass_2d(road_box.v0) == doctest::Approx(10.0 * 5.25).epsilon(1e-12));
    const InitialData iv = interval_data(-10.0, 10.0, 0.5);
    double m = 0.0;
    for (double x : iv.u0.values) m += x;
    CHECK(m * iv.u0.spacing == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("solve_V: zero data, Neumann limit, and units") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const InitialData empty;
    CHECK(fieldroad::solve_V(1.0, {{0.0}, 1.0}, empty, p) == 0.0);

    // nu -> 0 degenerates to the Neumann image convolution
    const ModelParams p0{1.0, 2.0, 1.0, 1e-9};
    const InitialData data = box_data(-2.0, 2.0, 0.0, 2.0, 0.1);
    for (double y : {0.0, 1.0, 3.0}) {
        const double got = fieldroad::solve_V(2.0, {{0.5}, y}, data, p0);
        double want = 0.0;
        for (std::size_t j = 0; j < data.v0.ny; ++j)
            for (std::size_t i = 0; i < data.v0.nx; ++i) {
                const double gx =
                    fieldroad::gauss_kernel_1d(2.0, 0.5 - data.v0.x_of(i), p0.d);
                const double gy =
                    fieldroad::gauss_kernel_1d(2.0, y - data.v0.y_of(j), p0.d) +
                    fieldroad::gauss_kernel_1d(2.0, y + data.v0.y_of(j), p0.d);
                want += data.v0.at(i, j) * gx * gy;
            }
        want *= data.v0.dx * data.v0.dy;
        CHECK(std::abs(got - want) <= 1e-6 * (1.0 + want));
    }
}

TEST_CASE("solve_V matches a Robin-ghost finite-difference solve") {
    // V is the field component of the coupled run with mu ~ 0: the exchange
    // boundary condition collapses to -d dV/dy = -nu V.
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const InitialData data = box_data(-10.0, 10.0, 10.0, 30.0, 0.5);

    SimConfig cfg;
    cfg.params = ModelParams{1.0, 2.0, 1e-12, 1.0};
    cfg.M = 50.0;
    cfg.h = 0.25;
    cfg.t_end = 50.0;
    DataSpec spec;
    spec.boxes.push_back({-10.0, 10.0, 10.0, 30.0, 1.0});
    cfg.data = fieldroad::rasterize(spec, cfg.h);
    SimState st = fieldroad::initial_state(cfg);
    step_to(st, cfg, cfg.t_end);

    const auto pick = [&](double x, double y) {
        const auto i = static_cast<std::size_t>(std::lround((x + 2.0 * cfg.M) / cfg.h));
        const auto j = static_cast<std::size_t>(std::lround(y / cfg.h));
        return st.v.at(i, j);
    };
    // headline point, relative tolerance
    const double at_ref = fieldroad::solve_V(50.0, {{0.0}, 5.0}, data, p);
    CHECK(std::abs(at_ref - pick(0.0, 5.0)) <= 1e-2 * pick(0.0, 5.0));
    // probe set against the field sup
    const double sup = st.v.max_abs();
    for (double x : {0.0, 5.0})
        for (double y : {0.0, 5.0, 20.0}) {
            const double got = fieldroad::solve_V(50.0, {{x}, y}, data, p);
            CHECK(std::abs(got - pick(x, y)) <= 1e-2 * sup);
        }
}

TEST_CASE("solve_U: zero data, narrow bump, indicator closed form") {
    const ModelParams p{1.0, 1.0 + 1e-9, 1.0, 1.0};
    CHECK(fieldroad::solve_U(1.0, 0.0, InitialData{}, p) == 0.0);

    const double w = 0.01;
    DataSpec bump;
    bump.intervals.push_back({-w, w, 1.0 / (2.0 * w)});
    const InitialData nb = fieldroad::rasterize(bump, w / 4.0);
    CHECK(fieldroad::solve_U(1.0, 0.0, nb, p) ==
          doctest::Approx(1.0 / std::sqrt(4.0 * M_PI)).epsilon(1e-3));

    const ModelParams p2{1.0, 3.0, 1.0, 1.0};
    const InitialData iv = interval_data(-4.0, 1.0, 0.01);
    DataSpec ispec;
    ispec.intervals.push_back({-4.0, 1.0, 1.0});
    const fieldroad::SemiAnalyticSolver closed(iv, ispec, p2, QuadratureConfig{});
    for (double t : {0.5, 5.0})
        for (double x : {-1.0, 0.0, 2.0}) {
            const double s = 2.0 * std::sqrt(p2.D * t);
            const double want =
                0.5 * (std::erf((x + 4.0) / s) - std::erf((x - 1.0) / s));
            // the interval-aware path is the error-function closed form
            CHECK(closed.U(t, x) == doctest::Approx(want).epsilon(1e-10));
            // the grid convolution carries the trapezoid's O(h^2) error
            CHECK(fieldroad::solve_U(t, x, iv, p2) ==
                  doctest::Approx(want).epsilon(1e-3));
        }
}

TEST_CASE("solve_v and solve_u vanish on zero data and stay even") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    const auto regime = fieldroad::classify_regime(p);
    const QuadratureConfig quad;
    CHECK(fieldroad::solve_v(1.0, {{0.5}, 1.0}, InitialData{}, p, regime, quad) ==
          0.0);
    CHECK(fieldroad::solve_u(1.0, 0.5, InitialData{}, p, regime, quad) == 0.0);

    fieldroad::SemiAnalyticSolver solver(box_data(-5.0, 5.0, 0.0, 5.0, 0.5),
                                         DataSpec{}, p, quad);
    for (double x : {1.0, 4.0}) {
        CHECK(std::abs(solver.v(5.0, x, 1.0) - solver.v(5.0, -x, 1.0)) <= 1e-9);
        CHECK(std::abs(solver.u(5.0, x) - solver.u(5.0, -x)) <= 1e-9);
    }
}

TEST_CASE("road-driven solution matches the finite-difference oracle") {
    // v0 = 0, u0 an indicator, strongly diffusive road
    const ModelParams p{1.0, 100.0, 1.0, 1.0};
    const QuadratureConfig quad;
    const double t = 20.0;

    SimConfig cfg;
    cfg.params = p;
    cfg.M = 80.0;
    cfg.h = 0.5;
    cfg.t_end = t;
    DataSpec spec;
    spec.intervals.push_back({-5.0, 5.0, 1.0});
    cfg.data = fieldroad::rasterize(spec, cfg.h);
    SimState st = fieldroad::initial_state(cfg);
    step_to(st, cfg, cfg.t_end);

    fieldroad::SemiAnalyticSolver solver(cfg.data, spec, p, quad);

    double sup_v = 0.0, sup_u = 0.0;
    for (double x : {0.0, 5.0, 15.0}) {
        sup_u = std::max(sup_u, std::abs(st.u.values[(size_t)std::lround(
                                    (x + 2.0 * cfg.M) / cfg.h)]));
        for (double y : {0.0, 2.0, 6.0})
            sup_v = std::max(
                sup_v, std::abs(st.v.at((size_t)std::lround((x + 2.0 * cfg.M) / cfg.h),
                                        (size_t)std::lround(y / cfg.h))));
    }
    for (double x : {0.0, 5.0, 15.0}) {
        const auto i = static_cast<std::size_t>(std::lround((x + 2.0 * cfg.M) / cfg.h));
        CHECK(std::abs(solver.u(t, x) - st.u.values[i]) <= 2e-2 * sup_u);
        for (double y : {0.0, 2.0, 6.0}) {
            const auto j = static_cast<std::size_t>(std::lround(y / cfg.h));
            const double got = solver.v(t, x, y);
            CHECK(std::abs(got - st.v.at(i, j)) <= 2e-2 * sup_v);
            CHECK(got >= -1e-6);  // numerical nonnegativity
            CHECK(got <= 2.0);    // boundedness by the data scale
        }
    }
}

TEST_CASE("quadrature tolerance halving stays within tolerance") {
    const ModelParams p{1.0, 2.0, 1.0, 1.0};
    QuadratureConfig quad;
    QuadratureConfig tight = quad;
    tight.tol = 0.5 * quad.tol;
    const InitialData data = interval_data(-5.0, 5.0, 0.5);
    fieldroad::SemiAnalyticSolver a(data, DataSpec{}, p, quad);
    fieldroad::SemiAnalyticSolver b(data, DataSpec{}, p, tight);
    const double va = a.v(5.0, 1.0, 1.0), vb = b.v(5.0, 1.0, 1.0);
    CHECK(std::abs(va - vb) <= 1e-6 * (1.0 + std::abs(va)));
}
