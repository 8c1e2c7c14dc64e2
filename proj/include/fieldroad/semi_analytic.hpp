#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "fieldroad/cubic.hpp"
#include "fieldroad/errors.hpp"
#include "fieldroad/grid.hpp"
#include "fieldroad/kernels.hpp"
#include "fieldroad/phi.hpp"

namespace fieldroad {

// Axis-aligned indicator pieces; the declarative form behind InitialData when
// the data is a union of boxes (field) and intervals (road). Keeping the
// description alongside the rasterized grids lets the Duhamel inner loops use
// closed-form convolutions instead of grid sums.
struct BoxSpec {
    double x1, x2, y1, y2, height;
};
struct IntervalSpec {
    double x1, x2, height;
};

struct DataSpec {
    std::vector<BoxSpec> boxes;
    std::vector<IntervalSpec> intervals;
};

inline InitialData rasterize(const DataSpec& spec, double h, double pad = 0.0);

namespace detail {

// integral of the 1-D Gaussian kernel over [a, b]:
// int_a^b G(t, x - z) dz = (erf((x-a)/q) - erf((x-b)/q)) / 2, q = 2 sqrt(ct)
inline double gauss_box_integral(double t, double x, double a, double b, double c) {
    const double q = 2.0 * std::sqrt(c * t);
    return 0.5 * (std::erf((x - a) / q) - std::erf((x - b) / q));
}

// Antiderivative (in omega) of the Robin correction
//   2 sqrt(pi) A sqrt(dt) G(t, y + omega) R((2Adt + y + omega) / (2 sqrt(dt)))
// evaluated stably via R; m = y + omega.
inline double robin_correction_antideriv(double t, double m, double a_coef,
                                         double d) {
    const double sdt = std::sqrt(d * t);
    const double z = m / (2.0 * sdt);
    const double r = erfcx_any(Complex(z + a_coef * sdt, 0.0)).real();
    return std::exp(-z * z) * r - std::erfc(z);
}

// integral over omega in [w1, w2] of the 1-D half-space kernel H_theta(t,y,w)
inline double half_space_kernel_1d_box(double theta, double t, double y, double w1,
                                       double w2, double d) {
    const double direct = gauss_box_integral(t, y, w1, w2, d);
    const double image = gauss_box_integral(t, -y, w1, w2, d);
    if (theta == 0.0) return direct + image;
    if (theta == 1.0) return direct - image;
    const double a_coef = theta / (d * (1.0 - theta));
    const double corr = robin_correction_antideriv(t, y + w2, a_coef, d) -
                        robin_correction_antideriv(t, y + w1, a_coef, d);
    return direct + image - corr;
}

}  // namespace detail

// Robin problem for V (boundary condition nu V - d dV/dy = 0, i.e.
// theta = nu / (1 + nu)); trapezoidal convolution of the v0 samples.
inline double solve_V(double t, const HalfSpacePoint& X, const InitialData& data,
                      const ModelParams& params) {
    const ScalarField2D& f = data.v0;
    if (f.values.empty()) return 0.0;
    const double theta = params.theta();
    // plain Riemann sum: rasterize already halves samples on the support
    // boundary, so the node values carry their own quadrature weights
    double sum = 0.0;
    for (std::size_t j = 0; j < f.ny; ++j) {
        const double omega = f.y_of(j);
        const double k1d = detail::half_space_kernel_1d(theta, t, X.y, omega, params.d);
        for (std::size_t i = 0; i < f.nx; ++i) {
            const double g = gauss_kernel_1d(t, X.x[0] - f.x_of(i), params.d);
            sum += g * k1d * f.at(i, j);
        }
    }
    return sum * f.dx * f.dy;
}

// Free heat flow on the road; trapezoidal convolution of the u0 samples.
inline double solve_U(double t, double x, const InitialData& data,
                      const ModelParams& params) {
    const RoadProfile& u = data.u0;
    if (u.values.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        sum += gauss_kernel_1d(t, x - u.x_of(i), params.D) * u.values[i];
    return sum * u.spacing;
}

// Evaluates the explicit solution of the coupled system by composing the
// closed-form V/U parts with the Lambda quadrature. Caches Lambda profiles and
// road traces of v so that repeated evaluations at shared times are cheap.
class SemiAnalyticSolver {
  public:
    SemiAnalyticSolver(InitialData data, DataSpec spec, ModelParams params,
                       QuadratureConfig quad)
        : data_(std::move(data)),
          spec_(std::move(spec)),
          params_(params),
          regime_(classify_regime(params)),
          quad_(quad) {}

    SemiAnalyticSolver(const DataSpec& spec, double h, ModelParams params,
                       QuadratureConfig quad)
        : SemiAnalyticSolver(rasterize(spec, h), spec, params, quad) {}

    const ModelParams& params() const { return params_; }
    const Regime& regime() const { return regime_; }

    // Closed-form V when box data is available, grid convolution otherwise.
    double V(double t, double x, double y) const {
        if (!spec_.boxes.empty() || data_.v0.values.empty()) {
            double sum = 0.0;
            for (const BoxSpec& b : spec_.boxes)
                sum += b.height *
                       detail::gauss_box_integral(t, x, b.x1, b.x2, params_.d) *
                       detail::half_space_kernel_1d_box(params_.theta(), t, y, b.y1,
                                                        b.y2, params_.d);
            return sum;
        }
        return solve_V(t, {{x}, y}, data_, params_);
    }

    double U(double t, double x) const {
        if (!spec_.intervals.empty() || data_.u0.values.empty()) {
            double sum = 0.0;
            for (const IntervalSpec& iv : spec_.intervals)
                sum += iv.height *
                       detail::gauss_box_integral(t, x, iv.x1, iv.x2, params_.D);
            return sum;
        }
        return solve_U(t, x, data_, params_);
    }

    // v = V + (mu/sqrt(d)) Lambda *x u0 + (mu nu/sqrt(d)) int_0^t Lambda(s) *x V|y=0 (t-s) ds
    double v(double t, double x, double y) {
        const double rd = std::sqrt(params_.d);
        double result = V(t, x, y);
        result += params_.mu / rd * convolve_lambda_u0(t, x, y);
        result += params_.mu * params_.nu / rd * duhamel_v(t, x, y);
        return result;
    }

    // u = e^{-mu t} U + nu int_0^t e^{-mu(t-s)} G_D(t-s) *x v|y=0 (s) ds
    double u(double t, double x) {
        double result = std::exp(-params_.mu * t) * U(t, x);
        result += params_.nu * duhamel_u(t, x);
        return result;
    }

  private:
    static constexpr int kTimeNodes = 64;    // graded Duhamel mesh for v
    static constexpr int kOmegaNodes = 41;   // spatial nodes per Lambda window
    static constexpr int kOuterNodes = 28;   // outer mesh for u
    static constexpr double kExpCut = 30.0;  // e^{-30} ~ 1e-13: tail cutoff

    // Lambda * u0 at time t; one batched profile over the u0 grid.
    double convolve_lambda_u0(double t, double x, double y) {
        const RoadProfile& u0 = data_.u0;
        if (u0.values.empty()) return 0.0;
        bool all_zero = true;
        for (double vv : u0.values)
            if (vv != 0.0) all_zero = false;
        if (all_zero) return 0.0;
        std::vector<double> xs(u0.size());
        for (std::size_t i = 0; i < u0.size(); ++i) xs[i] = x - u0.x_of(i);
        const std::vector<double> lam = lambda_profile(t, xs, y, params_, regime_, quad_);
        double sum = 0.0;
        for (std::size_t i = 0; i < u0.size(); ++i) sum += lam[i] * u0.values[i];
        return sum * u0.spacing;
    }

    // Lambda(s, . , y) sampled on the window grid for that s; cached by (s, y).
    const std::vector<double>& lambda_window(double s, double y, double& w_out,
                                             int& n_out) {
        const double w = window_width(s);
        const int n = window_nodes(s);
        w_out = w;
        n_out = n;
        const auto key = std::make_pair(s, y);
        auto it = lambda_cache_.find(key);
        if (it != lambda_cache_.end()) return it->second;
        std::vector<double> xs(n);
        const double dw = 2.0 * w / (n - 1);
        for (int k = 0; k < n; ++k) xs[k] = -w + k * dw;
        QuadratureConfig q = quad_;
        if (q.xi_max <= 0.0)
            q.xi_max = std::sqrt(16.0 * std::log(10.0) / (params_.d * s));
        return lambda_cache_.emplace(key, lambda_profile(s, xs, y, params_, regime_, q))
            .first->second;
    }

    double window_width(double s) const {
        return 8.0 * std::sqrt(std::max(params_.d, params_.D) * s);
    }

    // Spacing must resolve Lambda's fine scale sqrt(d s) and the V trace.
    int window_nodes(double s) const {
        const double dw = 0.5 * std::min(std::sqrt(params_.d * s), 2.0);
        const int n = static_cast<int>(std::ceil(2.0 * window_width(s) / dw)) + 1;
        return std::clamp(n, kOmegaNodes, 4001);
    }

    // int_0^t [Lambda(s, ., y) * V|y=0 (t - s, .)](x) ds with s = tau^p grading.
    double duhamel_v(double t, double x, double y) {
        bool any_v0 = !spec_.boxes.empty();
        for (double vv : data_.v0.values)
            if (vv != 0.0) any_v0 = true;
        if (!any_v0) return 0.0;
        const double p = quad_.graded_time_exponent;
        const double tau_max = std::pow(t, 1.0 / p);
        const double dtau = tau_max / kTimeNodes;
        double total = 0.0;
        for (int j = 0; j < kTimeNodes; ++j) {
            const double tau = (j + 0.5) * dtau;
            const double s = std::pow(tau, p);
            // Lambda carries e^{-y^2/(4ds)}: skip the suppressed small-s nodes.
            if (y * y / (4.0 * params_.d * s) > kExpCut) continue;
            const double weight = p * std::pow(tau, p - 1.0) * dtau;
            double w;
            int n_omega;
            const std::vector<double>& lam = lambda_window(s, y, w, n_omega);
            const double dw = 2.0 * w / (n_omega - 1);
            double conv = 0.0;
            for (int k = 0; k < n_omega; ++k) {
                const double wk = (k == 0 || k + 1 == n_omega) ? 0.5 : 1.0;
                const double omega = -w + k * dw;
                conv += wk * lam[k] * trace_V(t - s, x - omega);
            }
            total += weight * conv * dw;
        }
        return total;
    }

    double trace_V(double t, double x) const { return V(t, x, 0.0); }

    // Road trace of the full v at time s, sampled on a shared grid; cached.
    struct Trace {
        std::vector<double> values;
        double origin, spacing;
        double at(double x) const {
            // cubic (Catmull-Rom) interpolation; clamped to 0 outside
            const double r = (x - origin) / spacing;
            const auto n = static_cast<long>(values.size());
            const long i = static_cast<long>(std::floor(r));
            if (i < 1 || i + 2 >= n) {
                if (i < 0 || i + 1 >= n) return 0.0;
                const double f = r - static_cast<double>(i);
                return values[i] * (1.0 - f) + values[i + 1] * f;
            }
            const double f = r - static_cast<double>(i);
            const double a = values[i - 1], b = values[i], c = values[i + 1],
                         d = values[i + 2];
            return b + 0.5 * f * (c - a +
                                  f * (2.0 * a - 5.0 * b + 4.0 * c - d +
                                       f * (3.0 * (b - c) + d - a)));
        }
    };

    // Whole-road trace of v at time s_tr, built in one batched pass: per inner
    // Duhamel node the V trace is sampled on a lattice aligned with the Lambda
    // window so the omega-convolution is a sliding dot product.
    const Trace& v_trace(double s_tr, double x_lo, double x_hi, double spacing) {
        auto it = trace_cache_.find(s_tr);
        if (it != trace_cache_.end()) return it->second;
        Trace tr;
        tr.origin = x_lo;
        tr.spacing = spacing;
        const auto n = static_cast<std::size_t>(std::ceil((x_hi - x_lo) / spacing)) + 1;
        tr.values.resize(n);
        for (std::size_t m = 0; m < n; ++m)
            tr.values[m] = V(s_tr, tr.origin + static_cast<double>(m) * spacing, 0.0);

        const double rd = std::sqrt(params_.d);
        add_lambda_u0_profile(s_tr, tr, params_.mu / rd);
        add_duhamel_profile(s_tr, tr, params_.mu * params_.nu / rd);
        return trace_cache_.emplace(s_tr, std::move(tr)).first->second;
    }

    // adds c * (Lambda(t, ., 0) * u0) along the trace grid
    void add_lambda_u0_profile(double t, Trace& tr, double c) {
        const RoadProfile& u0 = data_.u0;
        if (u0.values.empty()) return;
        bool all_zero = true;
        for (double vv : u0.values)
            if (vv != 0.0) all_zero = false;
        if (all_zero) return;
        for (std::size_t m = 0; m < tr.values.size(); ++m)
            tr.values[m] += c * convolve_lambda_u0(
                                    t, tr.origin + static_cast<double>(m) * tr.spacing,
                                    0.0);
    }

    // adds c * int_0^t [Lambda(s) * V|y=0 (t - s)] ds along the trace grid
    void add_duhamel_profile(double t, Trace& tr, double c) {
        bool any_v0 = !spec_.boxes.empty();
        for (double vv : data_.v0.values)
            if (vv != 0.0) any_v0 = true;
        if (!any_v0) return;
        const std::size_t n_z = tr.values.size();
        const double p = quad_.graded_time_exponent;
        const double tau_max = std::pow(t, 1.0 / p);
        const double dtau = tau_max / kTimeNodes;
        std::vector<double> q_term(n_z, 0.0);
        std::vector<double> master;
        for (int j = 0; j < kTimeNodes; ++j) {
            const double tau = (j + 0.5) * dtau;
            const double s = std::pow(tau, p);
            const double weight = p * std::pow(tau, p - 1.0) * dtau;
            // lattice step: divides the trace spacing, resolves Lambda
            const double dw_want = 0.5 * std::min(std::sqrt(params_.d * s), 2.0);
            const auto ratio =
                static_cast<long>(std::ceil(tr.spacing / dw_want - 1e-12));
            const double dw = tr.spacing / static_cast<double>(ratio);
            const auto half =
                static_cast<long>(std::ceil(window_width(s) / dw));
            const long n_omega = 2 * half + 1;
            std::vector<double> xs(n_omega);
            for (long k = 0; k < n_omega; ++k)
                xs[k] = static_cast<double>(k - half) * dw;
            QuadratureConfig q = quad_;
            if (q.xi_max <= 0.0)
                q.xi_max = std::sqrt(16.0 * std::log(10.0) / (params_.d * s));
            const std::vector<double> lam =
                lambda_profile(s, xs, 0.0, params_, regime_, q);

            // master V-trace samples covering every z_m - omega_k
            const long n_master = static_cast<long>(n_z - 1) * ratio + n_omega;
            const double master_origin = tr.origin - static_cast<double>(half) * dw;
            master.resize(n_master);
            for (long l = 0; l < n_master; ++l)
                master[l] =
                    trace_V(t - s, master_origin + static_cast<double>(l) * dw);

            for (std::size_t m = 0; m < n_z; ++m) {
                // z_m - omega_k = master[m*ratio + (n_omega - 1 - k)]
                const double* base = master.data() + static_cast<long>(m) * ratio;
                double conv = 0.5 * (lam[0] * base[n_omega - 1] +
                                     lam[n_omega - 1] * base[0]);
                for (long k = 1; k + 1 < n_omega; ++k)
                    conv += lam[k] * base[n_omega - 1 - k];
                q_term[m] += weight * conv * dw;
            }
        }
        for (std::size_t m = 0; m < n_z; ++m) tr.values[m] += c * q_term[m];
    }

    double duhamel_u(double t, double x) {
        // only r = t - s within ~kExpCut / mu of the endpoint contributes
        const double r_max = std::min(t, kExpCut / params_.mu);
        const double dq = std::sqrt(r_max) / kOuterNodes;
        // trace grid: covers the data support plus the diffusive reach
        const double reach =
            8.0 * std::sqrt(std::max(params_.d, params_.D) * t) + 10.0;
        const double spacing = 1.0;
        // snap to the absolute lattice: symmetric data then sees a node set
        // symmetric about the origin, keeping u even in x
        const double x_lo =
            spacing * std::floor((std::min(x, support_min()) - reach) / spacing);
        const double x_hi =
            spacing * std::ceil((std::max(x, support_max()) + reach) / spacing);
        double total = 0.0;
        for (int k = 0; k < kOuterNodes; ++k) {
            const double q = (k + 0.5) * dq;
            const double r = q * q;  // graded toward the s = t endpoint
            const double weight = 2.0 * q * dq * std::exp(-params_.mu * r);
            const Trace& tr = v_trace(t - r, x_lo, x_hi, spacing);
            double conv;
            const double sigma = std::sqrt(4.0 * params_.D * r);
            if (sigma < 2.0 * spacing) {
                conv = tr.at(x);  // kernel narrower than the grid: G_D ~ delta
            } else {
                conv = 0.0;
                const auto n = tr.values.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const double wi = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
                    const double z = tr.origin + static_cast<double>(i) * spacing;
                    conv += wi * gauss_kernel_1d(r, x - z, params_.D) * tr.values[i];
                }
                conv *= spacing;
            }
            total += weight * conv;
        }
        return total;
    }

    double support_min() const {
        double m = 0.0;
        for (const BoxSpec& b : spec_.boxes) m = std::min(m, b.x1);
        for (const IntervalSpec& iv : spec_.intervals) m = std::min(m, iv.x1);
        if (spec_.boxes.empty() && !data_.v0.values.empty())
            m = std::min(m, data_.v0.origin_x);
        if (spec_.intervals.empty() && !data_.u0.values.empty())
            m = std::min(m, data_.u0.origin);
        return m;
    }
    double support_max() const {
        double m = 0.0;
        for (const BoxSpec& b : spec_.boxes) m = std::max(m, b.x2);
        for (const IntervalSpec& iv : spec_.intervals) m = std::max(m, iv.x2);
        if (spec_.boxes.empty() && !data_.v0.values.empty())
            m = std::max(m, data_.v0.x_of(data_.v0.nx ? data_.v0.nx - 1 : 0));
        if (spec_.intervals.empty() && !data_.u0.values.empty())
            m = std::max(m, data_.u0.x_of(data_.u0.size() ? data_.u0.size() - 1 : 0));
        return m;
    }

    InitialData data_;
    DataSpec spec_;
    ModelParams params_;
    Regime regime_;
    QuadratureConfig quad_;
    std::map<std::pair<double, double>, std::vector<double>> lambda_cache_;
    std::map<double, Trace> trace_cache_;
};

inline double solve_v(double t, const HalfSpacePoint& X, const InitialData& data,
                      const ModelParams& params, const Regime& regime,
                      const QuadratureConfig& quad) {
    (void)regime;
    SemiAnalyticSolver solver(data, DataSpec{}, params, quad);
    return solver.v(t, X.x[0], X.y);
}

inline double solve_u(double t, double x, const InitialData& data,
                      const ModelParams& params, const Regime& regime,
                      const QuadratureConfig& quad) {
    (void)regime;
    SemiAnalyticSolver solver(data, DataSpec{}, params, quad);
    return solver.u(t, x);
}

// Samples the indicator union on grids with spacing h (node-centered).
inline InitialData rasterize(const DataSpec& spec, double h, double pad) {
    InitialData out;
    if (!spec.boxes.empty()) {
        double x1 = spec.boxes[0].x1, x2 = spec.boxes[0].x2;
        double y2 = spec.boxes[0].y2;
        for (const BoxSpec& b : spec.boxes) {
            x1 = std::min(x1, b.x1);
            x2 = std::max(x2, b.x2);
            y2 = std::max(y2, b.y2);
        }
        x1 -= pad;
        x2 += pad;
        const auto nx = static_cast<std::size_t>(std::round((x2 - x1) / h)) + 1;
        const auto ny = static_cast<std::size_t>(std::round((y2 + pad) / h)) + 1;
        out.v0 = ScalarField2D(nx, ny, x1, 0.0, h, h);
        const double edge_tol = 1e-9 * h;
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = out.v0.x_of(i), y = out.v0.y_of(j);
                for (const BoxSpec& b : spec.boxes) {
                    if (x < b.x1 - edge_tol || x > b.x2 + edge_tol ||
                        y < b.y1 - edge_tol || y > b.y2 + edge_tol)
                        continue;
                    // half weight on box edges, quarter at corners, so the
                    // sampled mass matches the indicator's
                    double w = 1.0;
                    if (std::abs(x - b.x1) <= edge_tol || std::abs(x - b.x2) <= edge_tol)
                        w *= 0.5;
                    // edges on the domain boundary y = 0 keep full height: the
                    // node there represents the half-cell [0, h/2]
                    if ((std::abs(y - b.y1) <= edge_tol && b.y1 > edge_tol) ||
                        std::abs(y - b.y2) <= edge_tol)
                        w *= 0.5;
                    out.v0.at(i, j) += w * b.height;
                }
            }
    }
    if (!spec.intervals.empty()) {
        double x1 = spec.intervals[0].x1, x2 = spec.intervals[0].x2;
        for (const IntervalSpec& iv : spec.intervals) {
            x1 = std::min(x1, iv.x1);
            x2 = std::max(x2, iv.x2);
        }
        x1 -= pad;
        x2 += pad;
        const auto n = static_cast<std::size_t>(std::round((x2 - x1) / h)) + 1;
        out.u0 = RoadProfile(n, x1, h);
        const double edge_tol = 1e-9 * h;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = out.u0.x_of(i);
            for (const IntervalSpec& iv : spec.intervals) {
                if (x < iv.x1 - edge_tol || x > iv.x2 + edge_tol) continue;
                const bool edge = std::abs(x - iv.x1) <= edge_tol ||
                                  std::abs(x - iv.x2) <= edge_tol;
                out.u0.values[i] += (edge ? 0.5 : 1.0) * iv.height;
            }
        }
    }
    return out;
}

}  // namespace fieldroad
