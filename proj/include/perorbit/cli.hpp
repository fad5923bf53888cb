#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perorbit/polar.hpp"

namespace perorbit::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
    kExitOk = 0,
    kExitVerifyFailed = 1,
    kExitConfig = 2,
    kExitSolver = 3,
    kExitNoFold = 4,
};

/// Invalid flags, knobs, expressions or artifacts. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct XiRange {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;
};

/// One parameter swept over lo:hi:step.
struct Sweep {
    std::string param;
    XiRange range;
};

/// User-supplied model expressions. Scalar models use g, e over {t, u};
/// fishing models use a, f over {t}; planar models use F, G over {x, y}.
/// Parameters are visible as extra variables.
struct DslBlock {
    std::string g, e, a, f, F, G;
    std::optional<std::pair<double, double>> rest;

    bool empty() const noexcept { return g.empty() && e.empty() && a.empty() && f.empty() && F.empty() && G.empty(); }
};

struct RunConfig {
    std::string command;
    /// Catalog name; empty when the model comes from the DSL block.
    std::string model;
    std::map<std::string, double> params;
    DslBlock dsl;
    std::optional<double> period;
    bool polar = false;
    std::optional<XiRange> xi;
    std::optional<std::size_t> grid;
    double newton_tol = 1e-10;
    std::optional<Regularization> regularize;
    double g_cap = 1e4;
    double mu_cap = 1e6;
    std::string out;
    std::string format = "json";
    std::optional<Sweep> sweep;
    /// Artifact read by the verify command.
    std::string artifact;
};

/// Parses "lo:hi:step". Throws ConfigError.
XiRange parse_range(const std::string& text);
/// Parses "k=v,k=v". Throws ConfigError.
std::map<std::string, double> parse_assignments(const std::string& text);

/// Loads a JSON config file; keys mirror the long flags. Throws ConfigError.
RunConfig load_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

/// Range checks on all knobs. Throws ConfigError.
void validate(const RunConfig& config);

struct CatalogEntry {
    std::string name;
    std::string kind;
    std::map<std::string, double> defaults;
    std::string description;
};
const std::vector<CatalogEntry>& catalog();

struct CommandResult {
    nlohmann::json artifact;
    /// Lossy (xi, mu) export.
    std::string csv;
    /// Short human-readable summary.
    std::string summary;
    int exit_code = kExitOk;
};

/// Runs one command. Throws ConfigError and solver errors.
CommandResult execute(const RunConfig& config);

/// Serialized artifact text in the configured format.
std::string render(const CommandResult& result, const std::string& format);

/// Full command line front end; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace perorbit::cli
