#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fieldroad {

// Uniformly sampled scalar field v(x, y) over a rectangle.
// values[j * nx + i] is the sample at (origin_x + i*dx, origin_y + j*dy).
struct ScalarField2D {
    std::vector<double> values;
    std::size_t nx = 0, ny = 0;
    double origin_x = 0.0, origin_y = 0.0;
    double dx = 1.0, dy = 1.0;

    ScalarField2D() = default;
    ScalarField2D(std::size_t nx_, std::size_t ny_, double ox, double oy,
                  double dx_, double dy_)
        : values(nx_ * ny_, 0.0),
          nx(nx_),
          ny(ny_),
          origin_x(ox),
          origin_y(oy),
          dx(dx_),
          dy(dy_) {
        if (dx_ <= 0.0 || dy_ <= 0.0)
            throw std::invalid_argument("ScalarField2D spacing must be > 0");
    }

    double& at(std::size_t i, std::size_t j) { return values[j * nx + i]; }
    double at(std::size_t i, std::size_t j) const { return values[j * nx + i]; }
    double x_of(std::size_t i) const { return origin_x + static_cast<double>(i) * dx; }
    double y_of(std::size_t j) const { return origin_y + static_cast<double>(j) * dy; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

// Uniformly sampled road profile u(x).
struct RoadProfile {
    std::vector<double> values;
    double origin = 0.0;
    double spacing = 1.0;

    RoadProfile() = default;
    RoadProfile(std::size_t n, double origin_, double spacing_)
        : values(n, 0.0), origin(origin_), spacing(spacing_) {
        if (spacing_ <= 0.0)
            throw std::invalid_argument("RoadProfile spacing must be > 0");
    }

    std::size_t size() const { return values.size(); }
    double x_of(std::size_t i) const { return origin + static_cast<double>(i) * spacing; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

// Compactly supported nonnegative initial data (v0 in the field, u0 on the road).
struct InitialData {
    ScalarField2D v0;
    RoadProfile u0;
};

}  // namespace fieldroad
