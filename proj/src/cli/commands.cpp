#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "model_setup.hpp"
#include "perorbit/errors.hpp"

namespace perorbit::cli {

namespace {

using nlohmann::json;

constexpr double kScalarVerifyTol = 1e-5;
constexpr double kPolarVerifyTol = 1e-4;
constexpr double kCycleVerifyTol = 1e-3;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ContinuationOptions continuation_options(const ModelSetup& setup, const RunConfig& c) {
    ContinuationOptions o;
    o.grid_n = setup.grid_n;
    o.newton_tol = c.newton_tol;
    o.mu_cap = c.mu_cap;
    return o;
}

XiRange xi_range(const ModelSetup& setup, const RunConfig& c) {
    if (c.xi) return *c.xi;
    if (setup.default_xi) return *setup.default_xi;
    if (setup.kind == ModelKind::Fishing) {
        const double A = mean(setup.fishing->a);
        return {0.1 * A, 1.5 * A, 0.014 * A};
    }
    throw ConfigError("--xi lo:hi:step is required for expression models");
}

json header(const char* kind, const ModelSetup& setup, const RunConfig& c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = kind;
    j["model"] = setup.name;
    j["params"] = setup.params;
    j["grid_n"] = setup.grid_n;
    j["period"] = setup.period;
    j["config"] = config_to_json(c);
    return j;
}

json curve_json(const SolutionCurve& curve, bool with_profiles) {
    json points = json::array();
    for (const auto& p : curve.points) {
        json q{{"xi", p.xi}, {"mu", p.mu}, {"residual", p.residual}, {"newton_iters", p.newton_iters}};
        if (with_profiles) q["U"] = std::vector<double>(p.U.samples().begin(), p.U.samples().end());
        points.push_back(std::move(q));
    }
    return points;
}

std::string curve_csv(const SolutionCurve& curve) {
    std::string s = "xi,mu\n";
    for (const auto& p : curve.points) s += fmt(p.xi) + "," + fmt(p.mu) + "\n";
    return s;
}

void put_termination(json& j, const SolutionCurve& curve) {
    j["termination"] = to_string(curve.termination);
    j["stopped_at"] = curve.stopped_at ? json(*curve.stopped_at) : json(nullptr);
}

CommandResult cmd_trace(const RunConfig& c) {
    const ModelSetup setup = setup_model(c);
    const PeriodicProblem problem = traced_problem(setup, c);
    const XiRange xi = xi_range(setup, c);
    const SolutionCurve curve = trace_curve(problem, xi.lo, xi.hi, xi.step, continuation_options(setup, c));

    CommandResult r;
    r.artifact = header("curve", setup, c);
    r.artifact["polar"] = setup.kind == ModelKind::Planar;
    if (setup.kind == ModelKind::Fishing) r.artifact["sign_convention"] = "u' + g(t,u) = mu j(t), g = u^2 - a u, j = -f";
    r.artifact["xi"] = {{"lo", xi.lo}, {"hi", xi.hi}, {"step", xi.step}};
    r.artifact["points"] = curve_json(curve, true);
    put_termination(r.artifact, curve);
    r.csv = curve_csv(curve);
    r.summary = std::to_string(curve.points.size()) + " points, termination " + to_string(curve.termination);
    if (curve.stopped_at) r.summary += " at xi=" + fmt(*curve.stopped_at);
    r.exit_code = curve.termination == Termination::NewtonFail ? kExitSolver : kExitOk;
    return r;
}

CommandResult cmd_cycles(const RunConfig& c) {
    const ModelSetup setup = setup_model(c);
    const PolarProblem polar = polar_problem(setup, c);
    const XiRange xi = xi_range(setup, c);
    CycleSearchOptions opts;
    opts.continuation = continuation_options(setup, c);
    opts.g_cap = c.g_cap;
    const CycleSearch search = search_limit_cycles(polar, xi.lo, xi.hi, xi.step, opts);

    CommandResult r;
    r.artifact = header("cycles", setup, c);
    r.artifact["center"] = {setup.planar->x0, setup.planar->y0};
    r.artifact["xi"] = {{"lo", xi.lo}, {"hi", xi.hi}, {"step", xi.step}};
    json curve{{"points", curve_json(search.curve, false)}};
    put_termination(curve, search.curve);
    r.artifact["curve"] = std::move(curve);
    json roots = json::array();
    for (const auto& root : search.roots) {
        roots.push_back({{"xi0", root.xi0}, {"crossing", to_string(root.mu_slope_sign)}});
    }
    r.artifact["roots"] = std::move(roots);
    json cycles = json::array();
    std::ostringstream summary;
    summary << search.cycles.size() << " cycle(s)";
    for (const auto& cy : search.cycles) {
        cycles.push_back({{"xi", cy.xi},
                          {"time_period", cy.time_period},
                          {"stability", to_string(cy.stability)},
                          {"crossing", to_string(cy.crossing)},
                          {"polished", cy.polished},
                          {"mu_residual", cy.mu_residual},
                          {"verify_residual", cy.verify_residual},
                          {"r", std::vector<double>(cy.r.samples().begin(), cy.r.samples().end())},
                          {"verify", {{"return_gap", cy.verification.return_gap}, {"drift", cy.verification.drift}}}});
        summary << "; xi=" << fmt(cy.xi) << " period=" << fmt(cy.time_period) << " " << to_string(cy.stability);
    }
    r.artifact["cycles"] = std::move(cycles);
    r.csv = curve_csv(search.curve);
    r.summary = summary.str();
    r.exit_code = search.curve.termination == Termination::NewtonFail ? kExitSolver : kExitOk;
    return r;
}

CommandResult cmd_fishing(const RunConfig& c) {
    const ModelSetup setup = setup_model(c);
    if (setup.kind != ModelKind::Fishing) throw ConfigError("model '" + setup.name + "' is not a fishing model");
    if (c.polar || c.regularize) throw ConfigError("--polar and --regularize do not apply to fishing models");
    FishingOptions opts;
    opts.continuation = continuation_options(setup, c);
    if (c.xi) {
        opts.xi_lo = c.xi->lo;
        opts.xi_hi = c.xi->hi;
        opts.dxi = c.xi->step;
    }
    const FishingReport rep = fishing_report(*setup.fishing, opts);

    CommandResult r;
    r.artifact = header("fishing", setup, c);
    r.artifact["sign_convention"] = "u' + g(t,u) = mu j(t), g = u^2 - a u, j = -f";
    r.artifact["mu0"] = rep.mu0;
    r.artifact["xi_star"] = rep.xi_star;
    r.artifact["take"] = rep.take;
    r.artifact["bound_p6"] = rep.bound_p6;
    r.artifact["bound_p7"] = rep.bound_p7;
    r.artifact["bound_satisfied_p6"] = rep.bound_satisfied_p6;
    r.artifact["bound_satisfied_p7"] = rep.bound_satisfied_p7;
    r.artifact["points"] = curve_json(rep.curve, true);
    put_termination(r.artifact, rep.curve);
    r.csv = curve_csv(rep.curve);
    r.summary = "mu0 = " + fmt(rep.mu0) + " at xi* = " + fmt(rep.xi_star) + ", take = " + fmt(rep.take) +
                ", bound_p6 = " + fmt(rep.bound_p6) + ", bound_p7 = " + fmt(rep.bound_p7);
    return r;
}

CommandResult cmd_models() {
    CommandResult r;
    r.artifact["schema_version"] = kSchemaVersion;
    r.artifact["kind"] = "models";
    json list = json::array();
    std::string text;
    r.csv = "name,kind,params\n";
    for (const auto& e : catalog()) {
        list.push_back({{"name", e.name}, {"kind", e.kind}, {"params", e.defaults}, {"equations", e.description}});
        std::string params;
        for (const auto& [k, v] : e.defaults) params += (params.empty() ? "" : " ") + k + "=" + fmt(v);
        text += e.name + " [" + e.kind + "] " + params + "\n";
        r.csv += e.name + "," + e.kind + "," + params + "\n";
    }
    r.artifact["models"] = std::move(list);
    r.summary = text;
    return r;
}

// verify

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("artifact is missing '") + key + "'");
    return j.at(key);
}

std::vector<double> samples_of(const json& j, const char* key, std::size_t n) {
    std::vector<double> v;
    try {
        v = field(j, key).get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("artifact field '") + key + "': " + e.what());
    }
    if (v.size() != n) throw ConfigError(std::string("artifact field '") + key + "' has the wrong length");
    return v;
}

Stability stability_from(const std::string& s) {
    if (s == "Stable") return Stability::Stable;
    if (s == "Unstable") return Stability::Unstable;
    if (s == "Undetermined") return Stability::Undetermined;
    throw ConfigError("unknown stability '" + s + "'");
}

CommandResult verify_curve(const json& art, const RunConfig& c, const ModelSetup& setup) {
    const PeriodicProblem problem = traced_problem(setup, c);
    const bool polar = setup.kind == ModelKind::Planar;
    const ContinuationOptions opts = continuation_options(setup, c);
    CommandResult r;
    r.artifact["schema_version"] = kSchemaVersion;
    r.artifact["kind"] = "verification";
    r.artifact["artifact_kind"] = field(art, "kind");
    r.artifact["model"] = setup.name;
    json checks = json::array();
    bool all = true;
    double worst = 0.0;
    r.csv = "xi,max_deviation,tolerance,pass\n";
    for (const auto& p : field(art, "points")) {
        CurvePoint pt{0.0, 0.0, GridFunction(setup.period, samples_of(p, "U", setup.grid_n))};
        try {
            pt.xi = p.at("xi").get<double>();
            pt.mu = p.at("mu").get<double>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("artifact point: ") + e.what());
        }
        double umax = 0.0;
        for (double u : pt.U.samples()) umax = std::max(umax, std::abs(pt.xi + u));
        const double tol = polar ? kPolarVerifyTol : kScalarVerifyTol * (1.0 + umax);
        double dev = std::numeric_limits<double>::infinity();
        try {
            dev = verify_point(problem, pt, opts).max_deviation;
        } catch (const Error&) {
        }
        const bool pass = dev <= tol;
        all = all && pass;
        worst = std::max(worst, dev);
        checks.push_back({{"xi", pt.xi}, {"max_deviation", std::isfinite(dev) ? json(dev) : json("inf")},
                          {"tolerance", tol}, {"pass", pass}});
        r.csv += fmt(pt.xi) + "," + fmt(dev) + "," + fmt(tol) + "," + (pass ? "1" : "0") + "\n";
    }
    r.artifact["checks"] = std::move(checks);
    r.artifact["passed"] = all;
    r.summary = std::string(all ? "PASS" : "FAIL") + ": " + std::to_string(r.artifact["checks"].size()) +
                " point(s), worst max_deviation " + fmt(worst);
    r.exit_code = all ? kExitOk : kExitVerifyFailed;
    return r;
}

CommandResult verify_cycles(const json& art, const ModelSetup& setup) {
    if (setup.kind != ModelKind::Planar) throw ConfigError("cycles artifact with a non-planar model");
    const auto center = field(art, "center");
    CommandResult r;
    r.artifact["schema_version"] = kSchemaVersion;
    r.artifact["kind"] = "verification";
    r.artifact["artifact_kind"] = "cycles";
    r.artifact["model"] = setup.name;
    json checks = json::array();
    bool all = true;
    r.csv = "xi,return_gap,drift,tolerance,pass\n";
    for (const auto& cj : field(art, "cycles")) {
        LimitCycle cy;
        try {
            cy.x0 = center.at(0).get<double>();
            cy.y0 = center.at(1).get<double>();
            cy.xi = cj.at("xi").get<double>();
            cy.time_period = cj.at("time_period").get<double>();
            cy.stability = stability_from(cj.at("stability").get<std::string>());
        } catch (const json::exception& e) {
            throw ConfigError(std::string("artifact cycle: ") + e.what());
        }
        cy.r = GridFunction(2.0 * std::numbers::pi, samples_of(cj, "r", setup.grid_n));
        const double tol = kCycleVerifyTol * cy.r.max_abs();
        auto run = [&](Direction d) {
            try {
                return verify_cycle(*setup.planar, cy, d);
            } catch (const Error&) {
                const double inf = std::numeric_limits<double>::infinity();
                return CycleVerification{inf, inf};
            }
        };
        CycleVerification v;
        if (cy.stability == Stability::Stable) {
            v = run(Direction::Forward);
        } else if (cy.stability == Stability::Unstable) {
            v = run(Direction::Backward);
        } else {
            const auto f = run(Direction::Forward), b = run(Direction::Backward);
            v = std::max(f.return_gap, f.drift) <= std::max(b.return_gap, b.drift) ? f : b;
        }
        const bool pass = v.return_gap <= tol && v.drift <= tol;
        all = all && pass;
        auto num = [](double x) { return std::isfinite(x) ? json(x) : json("inf"); };
        checks.push_back({{"xi", cy.xi}, {"return_gap", num(v.return_gap)}, {"drift", num(v.drift)},
                          {"tolerance", tol}, {"pass", pass}});
        r.csv += fmt(cy.xi) + "," + fmt(v.return_gap) + "," + fmt(v.drift) + "," + fmt(tol) + "," +
                 (pass ? "1" : "0") + "\n";
    }
    r.artifact["checks"] = std::move(checks);
    r.artifact["passed"] = all;
    r.summary = std::string(all ? "PASS" : "FAIL") + ": " + std::to_string(r.artifact["checks"].size()) + " cycle(s)";
    r.exit_code = all ? kExitOk : kExitVerifyFailed;
    return r;
}

CommandResult cmd_verify(const RunConfig& c) {
    if (c.artifact.empty()) throw ConfigError("verify needs an artifact path");
    std::ifstream in(c.artifact);
    if (!in) throw ConfigError("cannot open artifact '" + c.artifact + "'");
    json art;
    try {
        art = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("artifact '" + c.artifact + "': " + e.what());
    }
    if (!art.is_object() || !art.contains("schema_version") || art["schema_version"] != kSchemaVersion) {
        throw ConfigError("artifact schema_version mismatch (expected " + std::to_string(kSchemaVersion) + ")");
    }
    const RunConfig stored = config_from_json(field(art, "config"));
    const ModelSetup setup = setup_model(stored);
    if (field(art, "grid_n") != setup.grid_n) throw ConfigError("artifact grid_n does not match its config");
    const std::string kind = field(art, "kind").get<std::string>();
    if (kind == "curve" || kind == "fishing") return verify_curve(art, stored, setup);
    if (kind == "cycles") return verify_cycles(art, setup);
    throw ConfigError("cannot verify artifacts of kind '" + kind + "'");
}

std::vector<double> sweep_values(const XiRange& r) {
    std::vector<double> v;
    const auto count = static_cast<std::size_t>(std::floor((r.hi - r.lo) / r.step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) v.push_back(r.lo + static_cast<double>(k) * r.step);
    return v;
}

CommandResult execute_one(const RunConfig& c) {
    if (c.command == "trace") return cmd_trace(c);
    if (c.command == "cycles") return cmd_cycles(c);
    if (c.command == "fishing") return cmd_fishing(c);
    if (c.command == "verify") return cmd_verify(c);
    return cmd_models();
}

std::size_t thread_budget(std::size_t jobs) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PERORBIT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = static_cast<std::size_t>(v);
    }
    return std::min(n, jobs);
}

CommandResult execute_sweep(const RunConfig& c) {
    const std::vector<double> values = sweep_values(c.sweep->range);
    std::vector<CommandResult> results(values.size());
    std::vector<std::string> errors(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < values.size(); k = next++) {
            RunConfig one = c;
            one.sweep.reset();
            one.params[c.sweep->param] = values[k];
            try {
                results[k] = execute_one(one);
            } catch (const std::exception& e) {
                errors[k] = e.what();
                results[k].exit_code = dynamic_cast<const NoInteriorMax*>(&e) ? kExitNoFold
                                       : dynamic_cast<const ConfigError*>(&e) ||
                                               dynamic_cast<const DegenerateParameters*>(&e)
                                           ? kExitConfig
                                           : kExitSolver;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t threads = thread_budget(values.size());
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    CommandResult r;
    r.artifact["schema_version"] = kSchemaVersion;
    r.artifact["kind"] = "sweep";
    r.artifact["command"] = c.command;
    r.artifact["param"] = c.sweep->param;
    r.artifact["config"] = config_to_json(c);
    json runs = json::array();
    r.csv = c.sweep->param + ",xi,mu\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
        json run{{"value", values[k]}, {"exit_code", results[k].exit_code}};
        if (errors[k].empty()) {
            run["artifact"] = results[k].artifact;
            std::istringstream rows(results[k].csv);
            std::string line;
            std::getline(rows, line);
            while (std::getline(rows, line)) r.csv += fmt(values[k]) + "," + line + "\n";
            r.summary += c.sweep->param + "=" + fmt(values[k]) + ": " + results[k].summary + "\n";
        } else {
            run["error"] = errors[k];
            r.summary += c.sweep->param + "=" + fmt(values[k]) + ": error: " + errors[k] + "\n";
        }
        if (r.exit_code == kExitOk) r.exit_code = results[k].exit_code;
        runs.push_back(std::move(run));
    }
    r.artifact["runs"] = std::move(runs);
    return r;
}

}  // namespace

CommandResult execute(const RunConfig& config) {
    validate(config);
    return config.sweep ? execute_sweep(config) : execute_one(config);
}

std::string render(const CommandResult& result, const std::string& format) {
    return format == "csv" ? result.csv : result.artifact.dump(2) + "\n";
}

}  // namespace perorbit::cli
