#pragma once

#include <optional>

#include "perorbit/cli.hpp"
#include "perorbit/models.hpp"

namespace perorbit::cli {

enum class ModelKind { Scalar, Fishing, Planar };

/// A config turned into solver objects.
struct ModelSetup {
    ModelKind kind = ModelKind::Scalar;
    std::string name;
    /// Parameters with catalog defaults filled in.
    std::map<std::string, double> params;
    std::size_t grid_n = kDefaultGridSize;
    double period = 1.0;
    std::optional<PeriodicProblem> scalar;
    std::optional<FishingModel> fishing;
    std::optional<PlanarSystem> planar;
    std::optional<XiRange> default_xi;
};

ModelSetup setup_model(const RunConfig& config);

/// The problem traced by the trace and verify commands.
PeriodicProblem traced_problem(const ModelSetup& setup, const RunConfig& config);
PolarProblem polar_problem(const ModelSetup& setup, const RunConfig& config);

}  // namespace perorbit::cli
