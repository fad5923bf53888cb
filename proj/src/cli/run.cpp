#include <CLI11.hpp>

#include <fstream>
#include <ostream>

#include "perorbit/cli.hpp"
#include "perorbit/errors.hpp"

namespace perorbit::cli {

namespace {

struct Flags {
    std::string config, model, param, g, e, a, f, F, G, rest, xi, regularize, out, format, sweep, artifact;
    double period = 0.0, newton_tol = 0.0, g_cap = 0.0, mu_cap = 0.0;
    std::size_t grid = 0;
    bool polar = false;
};

struct Registered {
    CLI::App* app;
    std::map<std::string, CLI::Option*> opts;
};

Registered add_command(CLI::App& root, const char* name, const char* help, Flags& fl) {
    Registered r{root.add_subcommand(name, help), {}};
    auto* app = r.app;
    auto add = [&](const char* flag, auto& target, const char* text) {
        r.opts[flag] = app->add_option(flag, target, text);
    };
    if (std::string(name) == "verify") {
        r.opts["artifact"] = app->add_option("artifact", fl.artifact, "artifact written by trace, cycles or fishing")
                                 ->required();
        add("--out", fl.out, "write the verification report here instead of stdout");
        add("--format", fl.format, "json or csv");
        return r;
    }
    if (std::string(name) == "models") {
        add("--format", fl.format, "json or csv");
        add("--out", fl.out, "output path");
        return r;
    }
    add("--config", fl.config, "JSON config file; flags override its values");
    add("--model", fl.model, "catalog model name");
    add("--param", fl.param, "model parameters k=v,k=v");
    add("--g", fl.g, "g(t,u) for u' + g(t,u) = mu + e(t)");
    add("--e", fl.e, "zero-mean forcing e(t)");
    add("--a", fl.a, "fishing growth rate a(t)");
    add("--f", fl.f, "fishing shape f(t), default 1");
    add("--F", fl.F, "planar field x' = F(x,y)");
    add("--G", fl.G, "planar field y' = G(x,y)");
    add("--rest", fl.rest, "planar rest point x0,y0");
    add("--period", fl.period, "period T of expression models (default 1)");
    r.opts["--polar"] = app->add_flag("--polar", fl.polar, "trace the polar form of a planar model");
    add("--xi", fl.xi, "continuation range lo:hi:step");
    add("--grid", fl.grid, "grid size, a power of two in [32, 4096]");
    add("--newton-tol", fl.newton_tol, "Newton tolerance");
    add("--regularize", fl.regularize, "regularization m=M,eps=E for polar problems");
    add("--g-cap", fl.g_cap, "singularity guard constant (0 disables)");
    add("--mu-cap", fl.mu_cap, "blow-up cap on |mu|");
    add("--out", fl.out, "output path (default stdout)");
    add("--format", fl.format, "json or csv");
    add("--sweep", fl.sweep, "parameter sweep p=lo:hi:step, threads capped by PERORBIT_THREADS");
    return r;
}

bool given(const Registered& r, const char* flag) {
    const auto it = r.opts.find(flag);
    return it != r.opts.end() && it->second->count() > 0;
}

RunConfig assemble(const Registered& r, const Flags& fl) {
    RunConfig c = given(r, "--config") ? load_config(fl.config) : RunConfig{};
    c.command = r.app->get_name();
    if (given(r, "--model")) c.model = fl.model;
    if (given(r, "--param")) {
        for (const auto& [k, v] : parse_assignments(fl.param)) c.params[k] = v;
    }
    if (given(r, "--g")) c.dsl.g = fl.g;
    if (given(r, "--e")) c.dsl.e = fl.e;
    if (given(r, "--a")) c.dsl.a = fl.a;
    if (given(r, "--f")) c.dsl.f = fl.f;
    if (given(r, "--F")) c.dsl.F = fl.F;
    if (given(r, "--G")) c.dsl.G = fl.G;
    if (given(r, "--rest")) {
        const auto comma = fl.rest.find(',');
        if (comma == std::string::npos) throw ConfigError("--rest expects x0,y0");
        const auto xy = parse_assignments("x=" + fl.rest.substr(0, comma) + ",y=" + fl.rest.substr(comma + 1));
        c.dsl.rest = std::make_pair(xy.at("x"), xy.at("y"));
    }
    if (given(r, "--period")) c.period = fl.period;
    if (given(r, "--polar")) c.polar = fl.polar;
    if (given(r, "--xi")) c.xi = parse_range(fl.xi);
    if (given(r, "--grid")) c.grid = fl.grid;
    if (given(r, "--newton-tol")) c.newton_tol = fl.newton_tol;
    if (given(r, "--regularize")) {
        const auto kv = parse_assignments(fl.regularize);
        if (kv.size() != 2 || !kv.count("m") || !kv.count("eps")) throw ConfigError("--regularize expects m=M,eps=E");
        const double m = kv.at("m");
        if (m != std::floor(m)) throw ConfigError("--regularize m must be an integer");
        c.regularize = Regularization{static_cast<int>(m), kv.at("eps")};
    }
    if (given(r, "--g-cap")) c.g_cap = fl.g_cap;
    if (given(r, "--mu-cap")) c.mu_cap = fl.mu_cap;
    if (given(r, "--out")) c.out = fl.out;
    if (given(r, "--format")) c.format = fl.format;
    if (given(r, "--sweep")) {
        const auto eq = fl.sweep.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--sweep expects p=lo:hi:step");
        c.sweep = Sweep{fl.sweep.substr(0, eq), parse_range(fl.sweep.substr(eq + 1))};
    }
    if (given(r, "artifact")) c.artifact = fl.artifact;
    return c;
}

int report(std::ostream& err, const char* what, const std::exception& e, int code) {
    err << "perorbit: " << what << ": " << e.what() << "\n";
    return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Periodic solutions and limit cycles by continuation in the mean value"};
    app.require_subcommand(1, 1);
    Flags fl;
    std::vector<Registered> commands;
    commands.push_back(add_command(app, "trace", "trace the solution curve mu(xi)", fl));
    commands.push_back(add_command(app, "cycles", "find limit cycles of a planar model", fl));
    commands.push_back(add_command(app, "fishing", "maximal sustainable fishing report", fl));
    commands.push_back(add_command(app, "verify", "re-integrate a stored artifact", fl));
    commands.push_back(add_command(app, "models", "list the model catalog", fl));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        err << "perorbit: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const auto it = std::find_if(commands.begin(), commands.end(), [](const Registered& r) { return r.app->parsed(); });
        const RunConfig config = assemble(*it, fl);
        const CommandResult result = execute(config);
        const std::string text = render(result, config.format);
        if (config.out.empty()) {
            out << text;
            if (!result.summary.empty() && config.command != "models") err << result.summary << "\n";
        } else {
            std::ofstream file(config.out, std::ios::binary);
            if (!file) throw ConfigError("cannot write '" + config.out + "'");
            file << text;
            if (!file) throw ConfigError("write to '" + config.out + "' failed");
            out << result.summary << "\n";
        }
        return result.exit_code;
    } catch (const ConfigError& e) {
        return report(err, "config error", e, kExitConfig);
    } catch (const SyntaxError& e) {
        return report(err, "expression error", e, kExitConfig);
    } catch (const UnknownIdentifier& e) {
        return report(err, "expression error", e, kExitConfig);
    } catch (const DegenerateParameters& e) {
        return report(err, "invalid parameters", e, kExitConfig);
    } catch (const RestPointMismatch& e) {
        return report(err, "invalid rest point", e, kExitConfig);
    } catch (const NoInteriorMax& e) {
        return report(err, "no interior maximum", e, kExitNoFold);
    } catch (const Error& e) {
        return report(err, "solver failure", e, kExitSolver);
    } catch (const std::invalid_argument& e) {
        return report(err, "config error", e, kExitConfig);
    } catch (const std::exception& e) {
        return report(err, "error", e, kExitSolver);
    }
}

}  // namespace perorbit::cli
