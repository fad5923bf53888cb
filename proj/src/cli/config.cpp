#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <string_view>

#include "perorbit/cli.hpp"

namespace perorbit::cli {

namespace {

using nlohmann::json;

double parse_number(std::string_view text, std::string_view what) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
        throw ConfigError("invalid number '" + std::string(text) + "' in " + std::string(what));
    }
    return v;
}

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

XiRange range_from_json(const json& j, const char* key) {
    if (j.is_string()) return parse_range(j.get<std::string>());
    if (j.is_object()) return {get_as<double>(j, "lo"), get_as<double>(j, "hi"), get_as<double>(j, "step")};
    throw ConfigError(std::string("config key '") + key + "' must be \"lo:hi:step\" or {lo, hi, step}");
}

json range_to_json(const XiRange& r) { return {{"lo", r.lo}, {"hi", r.hi}, {"step", r.step}}; }

}  // namespace

XiRange parse_range(const std::string& text) {
    std::vector<std::string_view> parts;
    std::string_view rest = text;
    for (;;) {
        const auto colon = rest.find(':');
        parts.push_back(rest.substr(0, colon));
        if (colon == std::string_view::npos) break;
        rest.remove_prefix(colon + 1);
    }
    if (parts.size() != 3) throw ConfigError("range '" + text + "' must have the form lo:hi:step");
    return {parse_number(parts[0], "range"), parse_number(parts[1], "range"), parse_number(parts[2], "range")};
}

std::map<std::string, double> parse_assignments(const std::string& text) {
    std::map<std::string, double> out;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw ConfigError("expected k=v in '" + std::string(item) + "'");
        }
        out[std::string(item.substr(0, eq))] = parse_number(item.substr(eq + 1), "assignment");
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known = {"command", "model",  "params",     "dsl",    "period",
                                                "polar",   "xi",     "grid",       "newton_tol", "regularize",
                                                "g_cap",   "mu_cap", "out",        "format", "sweep"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    RunConfig c;
    if (j.contains("command")) c.command = get_as<std::string>(j, "command");
    if (j.contains("model")) c.model = get_as<std::string>(j, "model");
    if (j.contains("params")) c.params = get_as<std::map<std::string, double>>(j, "params");
    if (j.contains("dsl")) {
        const json& d = j.at("dsl");
        if (!d.is_object()) throw ConfigError("config key 'dsl' must be an object");
        for (const auto& [key, value] : d.items()) {
            static const std::set<std::string> dsl_keys = {"g", "e", "a", "f", "F", "G", "rest"};
            if (!dsl_keys.count(key)) throw ConfigError("unknown dsl key '" + key + "'");
        }
        auto str = [&](const char* key) { return d.contains(key) ? get_as<std::string>(d, key) : std::string(); };
        c.dsl.g = str("g");
        c.dsl.e = str("e");
        c.dsl.a = str("a");
        c.dsl.f = str("f");
        c.dsl.F = str("F");
        c.dsl.G = str("G");
        if (d.contains("rest")) {
            const auto v = get_as<std::vector<double>>(d, "rest");
            if (v.size() != 2) throw ConfigError("dsl.rest must be [x0, y0]");
            c.dsl.rest = std::make_pair(v[0], v[1]);
        }
    }
    if (j.contains("period")) c.period = get_as<double>(j, "period");
    if (j.contains("polar")) c.polar = get_as<bool>(j, "polar");
    if (j.contains("xi")) c.xi = range_from_json(j.at("xi"), "xi");
    if (j.contains("grid")) c.grid = get_as<std::size_t>(j, "grid");
    if (j.contains("newton_tol")) c.newton_tol = get_as<double>(j, "newton_tol");
    if (j.contains("regularize") && !j.at("regularize").is_null()) {
        const json& r = j.at("regularize");
        c.regularize = Regularization{get_as<int>(r, "m"), get_as<double>(r, "eps")};
    }
    if (j.contains("g_cap")) c.g_cap = get_as<double>(j, "g_cap");
    if (j.contains("mu_cap")) c.mu_cap = get_as<double>(j, "mu_cap");
    if (j.contains("out")) c.out = get_as<std::string>(j, "out");
    if (j.contains("format")) c.format = get_as<std::string>(j, "format");
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
        const json& s = j.at("sweep");
        c.sweep = Sweep{get_as<std::string>(s, "param"), range_from_json(s, "sweep")};
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    j["model"] = c.model;
    j["params"] = c.params;
    if (!c.dsl.empty()) {
        json d = json::object();
        for (const auto& [key, value] : {std::pair{"g", &c.dsl.g}, {"e", &c.dsl.e}, {"a", &c.dsl.a},
                                         {"f", &c.dsl.f}, {"F", &c.dsl.F}, {"G", &c.dsl.G}}) {
            if (!value->empty()) d[key] = *value;
        }
        if (c.dsl.rest) d["rest"] = {c.dsl.rest->first, c.dsl.rest->second};
        j["dsl"] = d;
    }
    if (c.period) j["period"] = *c.period;
    j["polar"] = c.polar;
    if (c.xi) j["xi"] = range_to_json(*c.xi);
    if (c.grid) j["grid"] = *c.grid;
    j["newton_tol"] = c.newton_tol;
    j["regularize"] = c.regularize ? json{{"m", c.regularize->m}, {"eps", c.regularize->eps}} : json(nullptr);
    j["g_cap"] = c.g_cap;
    j["mu_cap"] = c.mu_cap;
    if (c.sweep) {
        json s = range_to_json(c.sweep->range);
        s["param"] = c.sweep->param;
        j["sweep"] = s;
    }
    return j;
}

void validate(const RunConfig& c) {
    static const std::set<std::string> commands = {"trace", "cycles", "fishing", "verify", "models"};
    if (!commands.count(c.command)) throw ConfigError("unknown command '" + c.command + "'");
    if (c.format != "json" && c.format != "csv") throw ConfigError("format must be json or csv");
    if (c.grid) {
        const std::size_t n = *c.grid;
        if (n < 32 || n > 4096 || (n & (n - 1)) != 0) {
            throw ConfigError("grid must be a power of two in [32, 4096]");
        }
    }
    if (c.xi) {
        if (!std::isfinite(c.xi->lo) || !std::isfinite(c.xi->hi) || !(c.xi->step > 0.0)) {
            throw ConfigError("xi range needs finite bounds and step > 0");
        }
    }
    if (c.sweep) {
        if (!(c.sweep->range.step > 0.0) || c.sweep->range.hi < c.sweep->range.lo) {
            throw ConfigError("sweep needs lo <= hi and step > 0");
        }
        if (c.command == "verify" || c.command == "models") throw ConfigError("sweep applies to trace, cycles and fishing");
    }
    if (!(c.newton_tol > 0.0) || c.newton_tol >= 1.0) throw ConfigError("newton-tol must lie in (0, 1)");
    if (c.period && !(*c.period > 0.0)) throw ConfigError("period must be positive");
    if (c.regularize && (c.regularize->m < 1 || !(c.regularize->eps >= 0.0))) {
        throw ConfigError("regularize needs m >= 1 and eps >= 0");
    }
    if (!(c.g_cap >= 0.0) || !(c.mu_cap > 0.0)) throw ConfigError("caps must be positive");
    if (!c.model.empty() && !c.dsl.empty()) throw ConfigError("give either --model or expressions, not both");
}

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = {
        {"van-der-pol", "planar", {}, "x' = y, y' = -(x^2 - 1) y - x"},
        {"selkov", "planar", {{"a", 0.08}, {"b", 0.6}}, "x' = -x + a y + x^2 y, y' = b - a y - x^2 y"},
        {"predator-prey",
         "planar",
         {{"a", 0.5}, {"m", 1.0}, {"d", 0.1}},
         "x' = x (1 - x) - m x y / (a + x), y' = -d y + m x y / (a + x)"},
        {"modified-vdp", "planar", {}, "x' = y, y' = -0.04 (x^2 - 1)(9 - x^2) y - x"},
        {"fishing-p10",
         "fishing",
         {{"b", 0.2}, {"a0", 6.0}, {"a1", 0.4}},
         "u' = u (a0 + a1 sin 2 pi t - u) - mu (1 + b sin 2 pi t), period 1"},
        {"fishing-constant", "fishing", {{"a", 2.0}, {"T", 1.0}}, "u' = u (a - u) - mu, period T"},
    };
    return entries;
}

}  // namespace perorbit::cli
