#include "model_setup.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "perorbit/errors.hpp"
#include "perorbit/expr.hpp"

namespace perorbit::cli {

namespace {

constexpr std::size_t kMaxSlots = 32;

/// An expression with its parameter slots bound; the leading `free` slots are
/// supplied per call.
class Bound {
public:
    Bound(const std::string& src, std::vector<std::string> free, const std::map<std::string, double>& params)
        : expr_(compile(src, free, params)), free_(free.size()) {
        for (const auto& [name, value] : params) base_.push_back(value);
    }
    Bound(expr::Expr e, std::size_t free, std::vector<double> base)
        : expr_(std::move(e)), free_(free), base_(std::move(base)) {}

    double operator()(double a, double b = 0.0) const {
        std::array<double, kMaxSlots> v{};
        v[0] = a;
        if (free_ > 1) v[1] = b;
        std::copy(base_.begin(), base_.end(), v.begin() + static_cast<std::ptrdiff_t>(free_));
        try {
            return expr::eval(expr_, std::span<const double>(v.data(), free_ + base_.size()));
        } catch (const NonFiniteValue&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }

    Bound derivative(const std::string& var) const { return Bound(expr::differentiate(expr_, var), free_, base_); }

    /// Samples a function of t, rejecting non-finite values.
    GridFunction sample(double period, std::size_t n, const char* what) const {
        return GridFunction::sample(period, n, [&](double t) {
            const double v = (*this)(t);
            if (!std::isfinite(v)) throw ConfigError(std::string(what) + " is not finite at t=" + std::to_string(t));
            return v;
        });
    }

private:
    static expr::Expr compile(const std::string& src, std::vector<std::string> vars,
                              const std::map<std::string, double>& params) {
        if (vars.size() + params.size() > kMaxSlots) throw ConfigError("too many parameters");
        for (const auto& [name, value] : params) {
            if (std::find(vars.begin(), vars.end(), name) != vars.end() || name == "pi" || name == "e") {
                throw ConfigError("parameter '" + name + "' shadows a variable or constant");
            }
            vars.push_back(name);
        }
        return expr::parse(src, vars);
    }

    expr::Expr expr_;
    std::size_t free_;
    std::vector<double> base_;
};

double param(const std::map<std::string, double>& p, const char* key) { return p.at(key); }

ModelSetup from_catalog(const RunConfig& c) {
    const auto& entries = catalog();
    const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name == c.model; });
    if (it == entries.end()) throw ConfigError("unknown model '" + c.model + "' (see the models command)");
    ModelSetup s;
    s.name = it->name;
    s.params = it->defaults;
    for (const auto& [key, value] : c.params) {
        if (!s.params.count(key)) throw ConfigError("model '" + s.name + "' has no parameter '" + key + "'");
        s.params[key] = value;
    }
    if (c.period) throw ConfigError("--period applies to expression models only");
    s.grid_n = c.grid.value_or(s.name == "predator-prey" ? 512 : kDefaultGridSize);
    const auto& p = s.params;
    if (it->kind == "planar") {
        s.kind = ModelKind::Planar;
        s.period = 2.0 * std::numbers::pi;
        if (s.name == "van-der-pol") {
            s.planar = van_der_pol();
            s.default_xi = XiRange{0.05, 2.4, 0.05};
        } else if (s.name == "selkov") {
            s.planar = selkov(param(p, "a"), param(p, "b"));
            s.default_xi = XiRange{0.05, 3.0, 0.05};
        } else if (s.name == "predator-prey") {
            s.planar = predator_prey(param(p, "a"), param(p, "m"), param(p, "d"));
            s.default_xi = XiRange{0.05, 1.0, 0.01};
        } else {
            s.planar = modified_van_der_pol();
            s.default_xi = XiRange{0.05, 6.0, 0.05};
        }
        return s;
    }
    s.kind = ModelKind::Fishing;
    if (s.name == "fishing-p10") {
        s.fishing = fishing_p10(param(p, "b"), param(p, "a0"), param(p, "a1"), s.grid_n);
    } else {
        if (!(param(p, "T") > 0.0)) throw DegenerateParameters("fishing period T must be positive");
        s.fishing = constant_fishing(param(p, "a"), param(p, "T"), s.grid_n);
    }
    s.period = s.fishing->period;
    return s;
}

ModelSetup from_dsl(const RunConfig& c) {
    const DslBlock& d = c.dsl;
    const bool planar = !d.F.empty() || !d.G.empty();
    const bool fishing = !d.a.empty() || !d.f.empty();
    const bool scalar = !d.g.empty() || !d.e.empty();
    if (int(planar) + int(fishing) + int(scalar) != 1) {
        throw ConfigError("give a model: --model NAME, --g [--e], --a [--f], or --F --G --rest");
    }
    ModelSetup s;
    s.params = c.params;
    s.grid_n = c.grid.value_or(kDefaultGridSize);
    if (planar) {
        if (d.F.empty() || d.G.empty()) throw ConfigError("planar models need both --F and --G");
        if (!d.rest) throw ConfigError("planar models need --rest x0,y0");
        if (c.period) throw ConfigError("--period does not apply to planar models");
        s.kind = ModelKind::Planar;
        s.name = "dsl-planar";
        s.period = 2.0 * std::numbers::pi;
        const Bound F(d.F, {"x", "y"}, c.params), G(d.G, {"x", "y"}, c.params);
        const Bound Fx = F.derivative("x"), Fy = F.derivative("y"), Gx = G.derivative("x"), Gy = G.derivative("y");
        PlanarSystem sys;
        sys.F = F;
        sys.G = G;
        sys.F_x = Fx;
        sys.F_y = Fy;
        sys.G_x = Gx;
        sys.G_y = Gy;
        sys.x0 = d.rest->first;
        sys.y0 = d.rest->second;
        sys.name = s.name;
        s.planar = std::move(sys);
        return s;
    }
    s.period = c.period.value_or(1.0);
    if (fishing) {
        if (d.a.empty()) throw ConfigError("fishing models need --a");
        s.kind = ModelKind::Fishing;
        s.name = "dsl-fishing";
        const Bound a(d.a, {"t"}, c.params);
        const Bound f(d.f.empty() ? "1" : d.f, {"t"}, c.params);
        s.fishing = FishingModel{a.sample(s.period, s.grid_n, "a(t)"), f.sample(s.period, s.grid_n, "f(t)"), s.period};
        return s;
    }
    if (d.g.empty()) throw ConfigError("scalar models need --g");
    s.kind = ModelKind::Scalar;
    s.name = "dsl";
    const Bound g(d.g, {"t", "u"}, c.params);
    const Bound g_u = g.derivative("u");
    std::optional<GridFunction> e;
    if (!d.e.empty()) e = Bound(d.e, {"t"}, c.params).sample(s.period, s.grid_n, "e(t)");
    try {
        s.scalar.emplace(g, g_u, s.period, e, std::nullopt, s.grid_n);
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }
    s.scalar->descriptor = s.name;
    return s;
}

}  // namespace

ModelSetup setup_model(const RunConfig& config) {
    return config.model.empty() ? from_dsl(config) : from_catalog(config);
}

PolarProblem polar_problem(const ModelSetup& setup, const RunConfig& config) {
    if (setup.kind != ModelKind::Planar) throw ConfigError("model '" + setup.name + "' is not planar");
    PolarProblem polar(*setup.planar);
    if (config.regularize && config.regularize->eps > 0.0) polar.set_regularization(*config.regularize);
    return polar;
}

PeriodicProblem traced_problem(const ModelSetup& setup, const RunConfig& config) {
    if (config.polar && setup.kind != ModelKind::Planar) throw ConfigError("--polar needs a planar model");
    if (config.regularize && setup.kind != ModelKind::Planar) {
        throw ConfigError("--regularize applies to planar models");
    }
    switch (setup.kind) {
        case ModelKind::Planar: {
            auto p = polar_problem(setup, config).periodic(setup.grid_n, config.g_cap);
            p.descriptor = setup.name;
            return p;
        }
        case ModelKind::Fishing: return fishing_problem(*setup.fishing);
        case ModelKind::Scalar: break;
    }
    return *setup.scalar;
}

}  // namespace perorbit::cli
