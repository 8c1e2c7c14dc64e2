#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "fieldroad/cubic.hpp"
#include "fieldroad/errors.hpp"
#include "fieldroad/grid.hpp"

namespace fieldroad {

// Explicit scheme on the truncated box (-2M, 2M) x (0, M); no-flux artificial
// boundaries via mirror ghosts, exchange condition via the road ghost row.
struct SimConfig {
    ModelParams params{1.0, 2.0, 1.0, 1.0};
    double M = 100.0;
    double h = 1.0;
    double t_end = 100.0;
    double cfl_safety = 0.9;
    double record_every = 1.0;
    InitialData data;

    std::size_t nx() const { return static_cast<std::size_t>(std::round(4.0 * M / h)) + 1; }
    std::size_t ny() const { return static_cast<std::size_t>(std::round(M / h)) + 1; }
    double x_of(std::size_t i) const { return -2.0 * M + static_cast<double>(i) * h; }
    double dt() const {
        // interior bound h^2/(4 max(d,D)), tightened by the exchange terms:
        // the road ghost adds 2 nu h/d to the j=0 row coefficient and the u
        // update carries mu dt, so positivity needs the two extra bounds.
        const double interior = h * h / (4.0 * std::max(params.d, params.D));
        const double road_row = h * h / (4.0 * params.d + 2.0 * params.nu * h);
        const double u_row = h * h / (2.0 * params.D + params.mu * h * h);
        return cfl_safety * std::min({interior, road_row, u_row});
    }

    void validate() const {
        if (M <= 0.0 || h <= 0.0 || t_end <= 0.0)
            throw DomainError("SimConfig: M, h, t_end must be > 0");
        if (cfl_safety <= 0.0 || cfl_safety > 1.0)
            throw DomainError("SimConfig: cfl_safety must be in (0, 1]");
        if (record_every <= 0.0) throw DomainError("SimConfig: record_every must be > 0");
        const double ratio = M / h;
        if (std::abs(ratio - std::round(ratio)) > 1e-9)
            throw DomainError("SimConfig: M must be an integer multiple of h");
    }
};

struct SimState {
    ScalarField2D v;
    RoadProfile u;
    double t = 0.0;
};

struct TimeSeriesRecord {
    double t = 0.0;
    double sup_v = 0.0;
    double sup_u = 0.0;
    double total_mass = 0.0;
    RoadProfile flux;
    std::optional<double> x0;
};

inline SimState initial_state(const SimConfig& config) {
    config.validate();
    SimState s;
    s.v = ScalarField2D(config.nx(), config.ny(), -2.0 * config.M, 0.0, config.h,
                        config.h);
    s.u = RoadProfile(config.nx(), -2.0 * config.M, config.h);
    s.t = 0.0;
    // nearest-node sampling of the provided initial data
    const ScalarField2D& v0 = config.data.v0;
    if (!v0.values.empty()) {
        for (std::size_t j = 0; j < v0.ny; ++j)
            for (std::size_t i = 0; i < v0.nx; ++i) {
                const double x = v0.x_of(i), y = v0.y_of(j);
                const auto gi = static_cast<long>(std::round((x + 2.0 * config.M) / config.h));
                const auto gj = static_cast<long>(std::round(y / config.h));
                if (gi < 0 || gj < 0 || gi >= static_cast<long>(config.nx()) ||
                    gj >= static_cast<long>(config.ny()))
                    throw DomainError("initial v0 support outside the box");
                s.v.at(static_cast<std::size_t>(gi), static_cast<std::size_t>(gj)) =
                    v0.at(i, j);
            }
    }
    const RoadProfile& u0 = config.data.u0;
    if (!u0.values.empty()) {
        for (std::size_t i = 0; i < u0.size(); ++i) {
            const auto gi =
                static_cast<long>(std::round((u0.x_of(i) + 2.0 * config.M) / config.h));
            if (gi < 0 || gi >= static_cast<long>(config.nx()))
                throw DomainError("initial u0 support outside the box");
            s.u.values[static_cast<std::size_t>(gi)] = u0.values[i];
        }
    }
    return s;
}

inline void step_inplace(SimState& state, const SimConfig& config, SimState& scratch) {
    const std::size_t nx = config.nx(), ny = config.ny();
    const double h = config.h, dt = config.dt();
    const double d = config.params.d, D = config.params.D;
    const double mu = config.params.mu, nu = config.params.nu;
    const double rv = d * dt / (h * h), ru = D * dt / (h * h);

    if (scratch.v.values.size() != state.v.values.size()) {
        scratch.v = state.v;
        scratch.u = state.u;
    }
    const std::vector<double>& v = state.v.values;
    const std::vector<double>& u = state.u.values;
    std::vector<double>& vn = scratch.v.values;
    std::vector<double>& un = scratch.u.values;

    const auto lx = static_cast<long>(nx), ly = static_cast<long>(ny);
    const double ghost_coef = 2.0 * h / d;

    for (long j = 0; j < ly; ++j) {
        const double* rowc = v.data() + j * lx;
        // mirror ghosts at the top edge; road ghost row handled below
        const double* rows = (j == 0) ? v.data() + lx : v.data() + (j - 1) * lx;
        const double* rown = (j + 1 == ly) ? v.data() + (ly - 2) * lx
                                           : v.data() + (j + 1) * lx;
        double* out = vn.data() + j * lx;
        if (j == 0) {
            // road ghost: central-difference realization of the exchange
            // flux -d dv/dy = mu u - nu v
            for (long i = 1; i + 1 < lx; ++i) {
                const double c = rowc[i];
                const double ghost = rows[i] + ghost_coef * (mu * u[i] - nu * c);
                out[i] = c + rv * (rowc[i - 1] + rowc[i + 1] + rown[i] + ghost -
                                   4.0 * c);
            }
            for (long i : {0L, lx - 1}) {
                const double c = rowc[i];
                const double e = rowc[i == 0 ? 1 : lx - 2];
                const double ghost = rows[i] + ghost_coef * (mu * u[i] - nu * c);
                out[i] = c + rv * (2.0 * e + rown[i] + ghost - 4.0 * c);
            }
        } else {
            for (long i = 1; i + 1 < lx; ++i) {
                const double c = rowc[i];
                out[i] = c + rv * (rowc[i - 1] + rowc[i + 1] + rown[i] + rows[i] -
                                   4.0 * c);
            }
            for (long i : {0L, lx - 1}) {
                const double c = rowc[i];
                const double e = rowc[i == 0 ? 1 : lx - 2];
                out[i] = c + rv * (2.0 * e + rown[i] + rows[i] - 4.0 * c);
            }
        }
    }
    for (long i = 0; i < lx; ++i) {
        const double c = u[i];
        const double e = u[i + 1 == lx ? lx - 2 : i + 1];
        const double w = u[i == 0 ? 1 : i - 1];
        un[i] = c + ru * (e + w - 2.0 * c) + dt * (nu * v[i] - mu * c);
    }
    state.v.values.swap(scratch.v.values);
    state.u.values.swap(scratch.u.values);
    state.t += dt;
}

inline SimState step(const SimState& state, const SimConfig& config) {
    SimState next = state;
    SimState scratch;
    step_inplace(next, config, scratch);
    return next;
}

inline double total_mass(const SimState& state, const SimConfig& config) {
    const std::size_t nx = config.nx(), ny = config.ny();
    double mv = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        const double wy = (j == 0 || j + 1 == ny) ? 0.5 : 1.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double wx = (i == 0 || i + 1 == nx) ? 0.5 : 1.0;
            mv += wx * wy * state.v.at(i, j);
        }
    }
    double mu_ = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double wx = (i == 0 || i + 1 == nx) ? 0.5 : 1.0;
        mu_ += wx * state.u.values[i];
    }
    return config.h * config.h * mv + config.h * mu_;
}

inline RoadProfile flux_profile(const SimState& state, const ModelParams& params) {
    RoadProfile f(state.u.size(), state.u.origin, state.u.spacing);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.values[i] = params.mu * state.u.values[i] - params.nu * state.v.at(i, 0);
    return f;
}

// Largest x where the profile changes sign (linear interpolation between the
// bracketing nodes); nullopt for single-signed profiles.
inline std::optional<double> rightmost_sign_change(const RoadProfile& profile) {
    const auto n = static_cast<long>(profile.size());
    for (long i = n - 2; i >= 0; --i) {
        const double a = profile.values[i], b = profile.values[i + 1];
        if (b == 0.0 && a != 0.0) return profile.x_of(static_cast<std::size_t>(i + 1));
        if (a == 0.0) continue;
        if ((a > 0.0) != (b > 0.0)) {
            const double frac = a / (a - b);
            return profile.x_of(static_cast<std::size_t>(i)) + frac * profile.spacing;
        }
    }
    return std::nullopt;
}

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

// Least-squares line through (ln t, ln value).
inline DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 8) throw DomainError("fit_decay_rate needs >= 8 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [t, v] : series) {
        if (t <= 0.0 || v <= 0.0)
            throw DomainError("fit_decay_rate requires positive samples");
        const double lx = std::log(t), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const auto n = static_cast<double>(series.size());
    DecayFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    for (const auto& [t, v] : series) {
        const double r = std::log(v) - (fit.slope * std::log(t) + fit.intercept);
        fit.max_residual = std::max(fit.max_residual, std::abs(r));
    }
    return fit;
}

inline TimeSeriesRecord make_record(const SimState& state, const SimConfig& config) {
    TimeSeriesRecord rec;
    rec.t = state.t;
    rec.sup_v = *std::max_element(state.v.values.begin(), state.v.values.end());
    rec.sup_u = *std::max_element(state.u.values.begin(), state.u.values.end());
    rec.total_mass = total_mass(state, config);
    rec.flux = flux_profile(state, config.params);
    auto x0 = rightmost_sign_change(rec.flux);
    if (x0) rec.x0 = *x0;
    return rec;
}

inline std::vector<TimeSeriesRecord> run(const SimConfig& config) {
    SimState state = initial_state(config);
    SimState scratch;
    const double sup0 =
        std::max({state.v.max_abs(), state.u.max_abs(), 1e-300});
    std::vector<TimeSeriesRecord> records;
    records.push_back(make_record(state, config));
    double next_record = config.record_every;
    const double dt = config.dt();
    const auto n_steps = static_cast<long long>(std::ceil(config.t_end / dt));
    for (long long k = 0; k < n_steps; ++k) {
        step_inplace(state, config, scratch);
        if (state.t >= next_record - 0.5 * dt || k + 1 == n_steps) {
            const double sup = std::max(state.v.max_abs(), state.u.max_abs());
            if (!std::isfinite(sup) || sup > 1e6 * sup0)
                throw InstabilityError("finite-difference run became unstable");
            records.push_back(make_record(state, config));
            next_record += config.record_every;
        }
    }
    return records;
}

}  // namespace fieldroad
