#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldroad/cubic.hpp"
#include "fieldroad/errors.hpp"
#include "fieldroad/fd_solver.hpp"
#include "fieldroad/kernels.hpp"
#include "fieldroad/phi.hpp"
#include "fieldroad/semi_analytic.hpp"
#include "fieldroad/version.hpp"

namespace fieldroad {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Command {
    KernelEval,
    PhiScan,
    Roots,
    SimulateFd,
    SimulateAnalytic,
    Compare,
    Decay,
    Flux,
};

inline const std::map<std::string, Command>& command_names() {
    static const std::map<std::string, Command> names = {
        {"kernel-eval", Command::KernelEval},
        {"phi-scan", Command::PhiScan},
        {"roots", Command::Roots},
        {"simulate-fd", Command::SimulateFd},
        {"simulate-analytic", Command::SimulateAnalytic},
        {"compare", Command::Compare},
        {"decay", Command::Decay},
        {"flux", Command::Flux},
    };
    return names;
}

struct SimSettings {
    double M = 100.0;
    double h = 1.0;
    double t_end = 100.0;
    double cfl_safety = 0.9;
    double record_every = 1.0;
};

struct ExperimentSpec {
    Command command = Command::Roots;
    ModelParams params{1.0, 2.0, 1.0, 1.0};
    DataSpec data;
    QuadratureConfig quad;
    SimSettings sim;
    std::string output_path = "out.csv";
    long seed = 0;
    double raster_h = 0.5;
    json resolved;  // the fully-resolved config document (for the sidecar)

    SimConfig sim_config() const {
        SimConfig cfg;
        cfg.params = params;
        cfg.M = sim.M;
        cfg.h = sim.h;
        cfg.t_end = sim.t_end;
        cfg.cfl_safety = sim.cfl_safety;
        cfg.record_every = sim.record_every;
        cfg.data = rasterize(data, sim.h);
        return cfg;
    }
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                                const std::string& path) {
    for (const auto& [key, _] : obj.items())
        if (!known.count(key))
            throw ConfigError("unknown key \"" + path + key + "\"");
}

inline double require_number(const json& obj, const std::string& key,
                             const std::string& path) {
    if (!obj.contains(key))
        throw ConfigError("missing required key \"" + path + key + "\"");
    if (!obj[key].is_number())
        throw ConfigError("key \"" + path + key + "\" must be a number");
    return obj[key].get<double>();
}

inline double number_or(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError("key \"" + key + "\" must be a number");
    return obj[key].get<double>();
}

inline double positive(double value, const std::string& name) {
    if (!(value > 0.0))
        throw ConfigError("\"" + name + "\" must be > 0 (got " +
                          std::to_string(value) + ")");
    return value;
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty())
        throw ConfigError("\"" + path + "\" must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : j) {
        if (!e.is_number())
            throw ConfigError("\"" + path + "\" must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::string format17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// RFC-4180-style field quoting (only when needed; our fields rarely need it)
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) body_ += ',';
            body_ += csv_field(header[i]);
        }
        body_ += '\n';
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) body_ += ',';
            body_ += csv_field(fields[i]);
        }
        body_ += '\n';
    }
    // write-to-temp then atomic rename; no partial output on failure
    void commit(const std::string& path) const {
        const std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw ConfigError("cannot open output path \"" + tmp + "\"");
            out << body_;
            if (!out) throw ConfigError("write failed for \"" + tmp + "\"");
        }
        std::filesystem::rename(tmp, path);
    }

  private:
    std::string body_;
};

inline void write_sidecar(const ExperimentSpec& spec,
                          const json& summary = json::object()) {
    json side;
    side["library"] = "fieldroad";
    side["version"] = kVersion;
    side["spec"] = spec.resolved;
    if (!summary.empty()) side["summary"] = summary;
    std::filesystem::path p(spec.output_path);
    p.replace_extension(".meta.json");
    const std::string tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot open output path \"" + tmp + "\"");
        out << side.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, p.string());
}

}  // namespace detail

inline ExperimentSpec parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown_keys(doc,
                                {"command", "params", "data", "quad", "sim", "eval",
                                 "scan", "sweep", "probes", "output", "seed",
                                 "raster_h"},
                                "");

    ExperimentSpec spec;

    if (!doc.contains("command") || !doc["command"].is_string())
        throw ConfigError("missing required key \"command\"");
    const std::string cmd = doc["command"].get<std::string>();
    auto it = command_names().find(cmd);
    if (it == command_names().end())
        throw ConfigError("unknown command \"" + cmd + "\"");
    spec.command = it->second;

    // --- params ---
    if (!doc.contains("params") || !doc["params"].is_object())
        throw ConfigError("missing required key \"params\"");
    const json& pj = doc["params"];
    detail::reject_unknown_keys(pj, {"d", "D", "mu", "nu"}, "params.");
    const double d = detail::positive(detail::number_or(pj, "d", 1.0), "params.d");
    const double D = detail::positive(detail::number_or(pj, "D", 2.0), "params.D");
    const double mu = detail::positive(detail::require_number(pj, "mu", "params."),
                                       "params.mu");
    const double nu = detail::positive(detail::require_number(pj, "nu", "params."),
                                       "params.nu");
    if (D == d) throw ConfigError("\"params.D\" must differ from \"params.d\"");
    spec.params = ModelParams(d, D, mu, nu);

    // --- data ---
    if (doc.contains("data")) {
        const json& dj = doc["data"];
        if (!dj.is_object()) throw ConfigError("\"data\" must be an object");
        detail::reject_unknown_keys(dj, {"boxes", "intervals"}, "data.");
        if (dj.contains("boxes")) {
            if (!dj["boxes"].is_array())
                throw ConfigError("\"data.boxes\" must be an array");
            for (const auto& bj : dj["boxes"]) {
                detail::reject_unknown_keys(bj, {"x", "y", "height"}, "data.boxes[].");
                const auto xs = detail::number_list(bj.at("x"), "data.boxes[].x");
                const auto ys = detail::number_list(bj.at("y"), "data.boxes[].y");
                if (xs.size() != 2 || ys.size() != 2 || xs[0] >= xs[1] ||
                    ys[0] >= ys[1] || ys[0] < 0.0)
                    throw ConfigError(
                        "\"data.boxes[]\" needs x=[x1,x2], y=[y1,y2] with x1<x2, "
                        "0<=y1<y2");
                const double height = detail::number_or(bj, "height", 1.0);
                if (height < 0.0)
                    throw ConfigError("\"data.boxes[].height\" must be >= 0");
                spec.data.boxes.push_back({xs[0], xs[1], ys[0], ys[1], height});
            }
        }
        if (dj.contains("intervals")) {
            if (!dj["intervals"].is_array())
                throw ConfigError("\"data.intervals\" must be an array");
            for (const auto& ij : dj["intervals"]) {
                detail::reject_unknown_keys(ij, {"x", "height"}, "data.intervals[].");
                const auto xs = detail::number_list(ij.at("x"), "data.intervals[].x");
                if (xs.size() != 2 || xs[0] >= xs[1])
                    throw ConfigError("\"data.intervals[]\" needs x=[x1,x2], x1<x2");
                const double height = detail::number_or(ij, "height", 1.0);
                if (height < 0.0)
                    throw ConfigError("\"data.intervals[].height\" must be >= 0");
                spec.data.intervals.push_back({xs[0], xs[1], height});
            }
        }
    }

    // --- quad ---
    if (doc.contains("quad")) {
        const json& qj = doc["quad"];
        detail::reject_unknown_keys(
            qj, {"xi_max", "panels", "nodes_per_panel", "tol", "graded_time_exponent"},
            "quad.");
        spec.quad.xi_max = detail::number_or(qj, "xi_max", 0.0);
        spec.quad.panels = static_cast<int>(detail::number_or(qj, "panels", 4096));
        spec.quad.nodes_per_panel =
            static_cast<int>(detail::number_or(qj, "nodes_per_panel", 16));
        spec.quad.tol = detail::number_or(qj, "tol", 1e-9);
        spec.quad.graded_time_exponent =
            detail::number_or(qj, "graded_time_exponent", 2.0);
        if (spec.quad.panels <= 0 || spec.quad.nodes_per_panel <= 0)
            throw ConfigError("\"quad.panels\" and \"quad.nodes_per_panel\" must be > 0");
        if (!(spec.quad.tol > 0.0) || spec.quad.tol > 1e-2)
            throw ConfigError("\"quad.tol\" must be in (0, 1e-2]");
        if (spec.quad.graded_time_exponent < 1.0)
            throw ConfigError("\"quad.graded_time_exponent\" must be >= 1");
    }

    // --- sim ---
    if (doc.contains("sim")) {
        const json& sj = doc["sim"];
        detail::reject_unknown_keys(
            sj, {"M", "h", "t_end", "cfl_safety", "record_every"}, "sim.");
        spec.sim.M = detail::positive(detail::number_or(sj, "M", 100.0), "sim.M");
        spec.sim.h = detail::positive(detail::number_or(sj, "h", 1.0), "sim.h");
        spec.sim.t_end =
            detail::positive(detail::number_or(sj, "t_end", 100.0), "sim.t_end");
        spec.sim.cfl_safety = detail::number_or(sj, "cfl_safety", 0.9);
        if (spec.sim.cfl_safety <= 0.0 || spec.sim.cfl_safety > 1.0)
            throw ConfigError("\"sim.cfl_safety\" must be in (0, 1]");
        spec.sim.record_every = detail::positive(
            detail::number_or(sj, "record_every", 1.0), "sim.record_every");
    }

    if (doc.contains("output")) {
        if (!doc["output"].is_string()) throw ConfigError("\"output\" must be a string");
        spec.output_path = doc["output"].get<std::string>();
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer())
            throw ConfigError("\"seed\" must be an integer");
        spec.seed = doc["seed"].get<long>();
    }
    spec.raster_h =
        detail::positive(detail::number_or(doc, "raster_h", 0.5), "raster_h");

    // command-specific payloads are validated inside execute(); keep the raw
    // document (with defaults applied) for the sidecar round-trip
    json resolved = doc;
    resolved["command"] = cmd;
    resolved["params"] = {{"d", d}, {"D", D}, {"mu", mu}, {"nu", nu}};
    resolved["output"] = spec.output_path;
    resolved["seed"] = spec.seed;
    resolved["raster_h"] = spec.raster_h;
    resolved["quad"] = {{"xi_max", spec.quad.xi_max},
                        {"panels", spec.quad.panels},
                        {"nodes_per_panel", spec.quad.nodes_per_panel},
                        {"tol", spec.quad.tol},
                        {"graded_time_exponent", spec.quad.graded_time_exponent}};
    if (doc.contains("sim") || spec.command == Command::SimulateFd ||
        spec.command == Command::Compare || spec.command == Command::Decay ||
        spec.command == Command::Flux)
        resolved["sim"] = {{"M", spec.sim.M},
                           {"h", spec.sim.h},
                           {"t_end", spec.sim.t_end},
                           {"cfl_safety", spec.sim.cfl_safety},
                           {"record_every", spec.sim.record_every}};
    spec.resolved = resolved;
    return spec;
}

namespace detail {

inline json payload(const ExperimentSpec& spec, const char* key) {
    if (!spec.resolved.contains(key))
        throw ConfigError(std::string("missing required key \"") + key + "\"");
    const json& p = spec.resolved[key];
    if (!p.is_object())
        throw ConfigError(std::string("\"") + key + "\" must be an object");
    return p;
}

inline int execute_kernel_eval(const ExperimentSpec& spec) {
    const json p = payload(spec, "eval");
    reject_unknown_keys(p, {"kernel", "t", "x", "y", "theta", "omega", "diffusivity"},
                        "eval.");
    const std::string kernel = p.value("kernel", std::string("lambda"));
    const auto ts = number_list(p.at("t"), "eval.t");
    const auto xs = number_list(p.at("x"), "eval.x");
    const auto ys = number_list(p.at("y"), "eval.y");

    CsvWriter csv({"t", "x", "y", "value"});
    if (kernel == "lambda") {
        const Regime regime = classify_regime(spec.params);
        for (double t : ts)
            for (double y : ys) {
                const auto row =
                    lambda_profile(t, xs, y, spec.params, regime, spec.quad);
                for (std::size_t i = 0; i < xs.size(); ++i)
                    csv.row({format17(t), format17(xs[i]), format17(y),
                             format17(row[i])});
            }
    } else if (kernel == "half_space") {
        const double theta = number_or(p, "theta", spec.params.theta());
        if (theta < 0.0 || theta > 1.0)
            throw ConfigError("\"eval.theta\" must be in [0, 1]");
        const double omega = number_or(p, "omega", 0.0);
        if (omega < 0.0) throw ConfigError("\"eval.omega\" must be >= 0");
        for (double t : ts)
            for (double y : ys)
                for (double x : xs)
                    csv.row({format17(t), format17(x), format17(y),
                             format17(half_space_kernel(theta, t, {{x}, y},
                                                        {{0.0}, omega},
                                                        spec.params.d, 2))});
    } else if (kernel == "gauss") {
        const double diff = positive(number_or(p, "diffusivity", spec.params.d),
                                     "eval.diffusivity");
        for (double t : ts)
            for (double y : ys)
                for (double x : xs)
                    csv.row({format17(t), format17(x), format17(y),
                             format17(gauss_kernel(t, {x, y}, diff, 2))});
    } else {
        throw ConfigError("\"eval.kernel\" must be lambda, half_space, or gauss");
    }
    csv.commit(spec.output_path);
    write_sidecar(spec);
    return 0;
}

inline int execute_phi_scan(const ExperimentSpec& spec) {
    const json p = payload(spec, "scan");
    reject_unknown_keys(p, {"t", "delta", "y"}, "scan.");
    const auto ts = number_list(p.at("t"), "scan.t");
    const auto deltas = number_list(p.at("delta"), "scan.delta");
    const auto ys =
        p.contains("y") ? number_list(p.at("y"), "scan.y") : std::vector<double>{0.0};
    const Regime regime = classify_regime(spec.params);
    CsvWriter csv({"t", "delta", "y", "phi"});
    for (double t : ts)
        for (double delta : deltas)
            for (double y : ys)
                csv.row({format17(t), format17(delta), format17(y),
                         format17(phi_compensated({t, y, delta}, spec.params, regime))});
    csv.commit(spec.output_path);
    write_sidecar(spec);
    return 0;
}

inline const char* kind_name(RootKind k) {
    switch (k) {
        case RootKind::ThreeRealSimple: return "three_real_simple";
        case RootKind::OneRealConjugatePair: return "one_real_conjugate_pair";
        case RootKind::DoubleRoot: return "double_root";
        case RootKind::TripleRoot: return "triple_root";
    }
    return "?";
}

inline const char* regime_name(RegimeKind k) {
    switch (k) {
        case RegimeKind::SimpleOnly: return "simple_only";
        case RegimeKind::TripleAt: return "triple_at";
        case RegimeKind::DoubleTwice: return "double_twice";
        case RegimeKind::DoubleOnce: return "double_once";
    }
    return "?";
}

inline int execute_roots(const ExperimentSpec& spec) {
    json p = spec.resolved.contains("sweep") ? payload(spec, "sweep") : json::object();
    reject_unknown_keys(p, {"delta_min", "delta_max", "count"}, "sweep.");
    const double lo = number_or(p, "delta_min", 0.0);
    const double hi = number_or(p, "delta_max",
                                10.0 * (spec.params.A() * spec.params.A() *
                                            spec.params.d +
                                        spec.params.mu));
    const int count = static_cast<int>(number_or(p, "count", 201));
    if (count < 2 || hi <= lo)
        throw ConfigError("\"sweep\" needs delta_min < delta_max and count >= 2");

    const Regime regime = classify_regime(spec.params);
    CsvWriter csv({"delta", "re_alpha", "im_alpha", "re_beta", "im_beta", "re_gamma",
                   "im_gamma", "discriminant", "kind"});
    for (int i = 0; i < count; ++i) {
        const double delta = lo + (hi - lo) * i / (count - 1);
        const RootTriple r = solve_p_delta(spec.params, delta);
        csv.row({format17(delta), format17(r.alpha.real()), format17(r.alpha.imag()),
                 format17(r.beta.real()), format17(r.beta.imag()),
                 format17(r.gamma.real()), format17(r.gamma.imag()),
                 format17(discriminant(spec.params, delta)), kind_name(r.kind)});
    }
    csv.commit(spec.output_path);
    json summary;
    summary["regime"] = regime_name(regime.kind);
    summary["singular_deltas"] = regime.singular_deltas;
    write_sidecar(spec, summary);
    return 0;
}

inline int execute_simulate_fd(const ExperimentSpec& spec) {
    const auto records = run(spec.sim_config());
    CsvWriter csv({"t", "sup_v", "sup_u", "total_mass", "x0"});
    for (const auto& r : records)
        csv.row({format17(r.t), format17(r.sup_v), format17(r.sup_u),
                 format17(r.total_mass), r.x0 ? format17(*r.x0) : ""});
    csv.commit(spec.output_path);

    // final flux profile next to the main table
    std::filesystem::path fp(spec.output_path);
    fp.replace_extension(".flux.csv");
    CsvWriter flux_csv({"x", "flux"});
    const RoadProfile& flux = records.back().flux;
    for (std::size_t i = 0; i < flux.size(); ++i)
        flux_csv.row({format17(flux.x_of(i)), format17(flux.values[i])});
    flux_csv.commit(fp.string());

    json summary;
    summary["records"] = records.size();
    summary["final_t"] = records.back().t;
    summary["final_mass"] = records.back().total_mass;
    summary["flux_profile"] = fp.string();
    write_sidecar(spec, summary);
    return 0;
}

struct ProbeSet {
    std::vector<double> ts;
    std::vector<std::pair<double, double>> v_points;
    std::vector<double> u_points;
};

inline ProbeSet parse_probes(const ExperimentSpec& spec) {
    const json p = payload(spec, "probes");
    reject_unknown_keys(p, {"t", "v_points", "u_points"}, "probes.");
    ProbeSet out;
    out.ts = number_list(p.at("t"), "probes.t");
    if (p.contains("v_points")) {
        if (!p["v_points"].is_array())
            throw ConfigError("\"probes.v_points\" must be an array of [x, y]");
        for (const auto& e : p["v_points"]) {
            const auto xy = number_list(e, "probes.v_points[]");
            if (xy.size() != 2 || xy[1] < 0.0)
                throw ConfigError("\"probes.v_points[]\" must be [x, y>=0]");
            out.v_points.emplace_back(xy[0], xy[1]);
        }
    }
    if (p.contains("u_points"))
        out.u_points = number_list(p.at("u_points"), "probes.u_points");
    if (out.v_points.empty() && out.u_points.empty())
        throw ConfigError("\"probes\" needs v_points or u_points");
    return out;
}

inline int execute_simulate_analytic(const ExperimentSpec& spec) {
    const ProbeSet probes = parse_probes(spec);
    SemiAnalyticSolver solver(spec.data, spec.raster_h, spec.params, spec.quad);
    CsvWriter csv({"t", "x", "y", "kind", "value"});
    for (double t : probes.ts) {
        for (const auto& [x, y] : probes.v_points)
            csv.row({format17(t), format17(x), format17(y), "v",
                     format17(solver.v(t, x, y))});
        for (double x : probes.u_points)
            csv.row({format17(t), format17(x), "", "u", format17(solver.u(t, x))});
    }
    csv.commit(spec.output_path);
    write_sidecar(spec);
    return 0;
}

inline int execute_compare(const ExperimentSpec& spec) {
    const ProbeSet probes = parse_probes(spec);
    const SimConfig cfg = spec.sim_config();
    SemiAnalyticSolver solver(spec.data, spec.raster_h, spec.params, spec.quad);

    std::vector<double> ts = probes.ts;
    std::sort(ts.begin(), ts.end());
    SimState state = initial_state(cfg);
    SimState scratch;
    const double dt = cfg.dt();

    CsvWriter csv({"t", "x", "y", "kind", "fd", "analytic", "abs_diff", "rel_sup"});
    double max_rel = 0.0;
    for (double t_probe : ts) {
        while (state.t < t_probe - 0.5 * dt) step_inplace(state, cfg, scratch);
        const double t = state.t;
        double sup = 1e-300;
        for (double vv : state.v.values) sup = std::max(sup, vv);
        auto node = [&](double x) {
            return static_cast<std::size_t>(std::round((x + 2.0 * cfg.M) / cfg.h));
        };
        for (const auto& [x, y] : probes.v_points) {
            const auto gj = static_cast<std::size_t>(std::round(y / cfg.h));
            const double fd = state.v.at(node(x), gj);
            const double sa = solver.v(t, x, y);
            const double rel = std::abs(fd - sa) / sup;
            max_rel = std::max(max_rel, rel);
            csv.row({format17(t), format17(x), format17(y), "v", format17(fd),
                     format17(sa), format17(std::abs(fd - sa)), format17(rel)});
        }
        for (double x : probes.u_points) {
            const double fd = state.u.values[node(x)];
            const double sa = solver.u(t, x);
            const double rel = std::abs(fd - sa) / sup;
            max_rel = std::max(max_rel, rel);
            csv.row({format17(t), format17(x), "", "u", format17(fd), format17(sa),
                     format17(std::abs(fd - sa)), format17(rel)});
        }
    }
    csv.commit(spec.output_path);
    json summary;
    summary["max_rel_sup"] = max_rel;
    write_sidecar(spec, summary);
    return 0;
}

inline int execute_decay(const ExperimentSpec& spec) {
    const auto records = run(spec.sim_config());
    CsvWriter csv({"t", "sup_v", "sup_u"});
    std::vector<std::pair<double, double>> sv, su;
    for (const auto& r : records) {
        if (r.t <= 0.0) continue;
        csv.row({format17(r.t), format17(r.sup_v), format17(r.sup_u)});
        if (r.t >= spec.sim.t_end / 10.0) {
            sv.emplace_back(r.t, r.sup_v);
            su.emplace_back(r.t, r.sup_u);
        }
    }
    csv.commit(spec.output_path);
    const DecayFit fv = fit_decay_rate(sv);
    const DecayFit fu = fit_decay_rate(su);
    json summary;
    summary["slope_sup_v"] = fv.slope;
    summary["slope_sup_u"] = fu.slope;
    summary["intercept_sup_v"] = fv.intercept;
    summary["intercept_sup_u"] = fu.intercept;
    summary["max_residual_sup_v"] = fv.max_residual;
    summary["max_residual_sup_u"] = fu.max_residual;
    summary["fit_window"] = {spec.sim.t_end / 10.0, spec.sim.t_end};
    write_sidecar(spec, summary);
    return 0;
}

inline int execute_flux(const ExperimentSpec& spec) {
    const auto records = run(spec.sim_config());
    CsvWriter csv({"t", "flux_at_0", "x0"});
    std::vector<std::pair<double, double>> f0_series, x0_series;
    for (const auto& r : records) {
        const auto mid = static_cast<std::size_t>(r.flux.size() / 2);
        const double f0 = r.flux.values[mid];
        csv.row({format17(r.t), format17(f0), r.x0 ? format17(*r.x0) : ""});
        if (r.t > 0.0 && std::abs(f0) > 0.0) f0_series.emplace_back(r.t, std::abs(f0));
        if (r.t > 0.0 && r.x0 && *r.x0 > 0.0) x0_series.emplace_back(r.t, *r.x0);
    }
    csv.commit(spec.output_path);

    std::filesystem::path fp(spec.output_path);
    fp.replace_extension(".profile.csv");
    CsvWriter prof({"t", "x", "flux"});
    for (const auto& r : records)
        for (std::size_t i = 0; i < r.flux.size(); ++i)
            prof.row({format17(r.t), format17(r.flux.x_of(i)),
                      format17(r.flux.values[i])});
    prof.commit(fp.string());

    json summary;
    summary["flux_profiles"] = fp.string();
    const auto mid = static_cast<std::size_t>(records.back().flux.size() / 2);
    summary["final_flux_at_0"] = records.back().flux.values[mid];
    auto tail = [&](std::vector<std::pair<double, double>>& s) {
        std::vector<std::pair<double, double>> w;
        for (const auto& e : s)
            if (e.first >= spec.sim.t_end / 8.0) w.push_back(e);
        return w;
    };
    if (auto w = tail(f0_series); w.size() >= 8)
        summary["slope_abs_flux_at_0"] = fit_decay_rate(w).slope;
    if (auto w = tail(x0_series); w.size() >= 8)
        summary["slope_x0"] = fit_decay_rate(w).slope;
    write_sidecar(spec, summary);
    return 0;
}

}  // namespace detail

inline int execute(const ExperimentSpec& spec) {
    switch (spec.command) {
        case Command::KernelEval: return detail::execute_kernel_eval(spec);
        case Command::PhiScan: return detail::execute_phi_scan(spec);
        case Command::Roots: return detail::execute_roots(spec);
        case Command::SimulateFd: return detail::execute_simulate_fd(spec);
        case Command::SimulateAnalytic: return detail::execute_simulate_analytic(spec);
        case Command::Compare: return detail::execute_compare(spec);
        case Command::Decay: return detail::execute_decay(spec);
        case Command::Flux: return detail::execute_flux(spec);
    }
    throw ConfigError("unhandled command");
}

}  // namespace fieldroad
