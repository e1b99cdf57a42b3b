#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "empcn/geometry.hpp"
#include "empcn/graph.hpp"
#include "empcn/lifting.hpp"
#include "empcn/model_config.hpp"

namespace empcn::checks {

struct CheckSettings {
    int graphs = 20;
    int transforms = 20;
    std::size_t min_nodes = 5;
    std::size_t max_nodes = 8;
    std::size_t dim = 3;
    std::size_t feature_width = 2;
    double translation_scale = 100.0;
    double invariance_tol = 1e-6;
    double equivariance_tol = 1e-6;
    double permutation_tol = 1e-12;
    double gradient_tol = 1e-4;
    double fd_step = 1e-6;
    /// Entries probed per parameter block; 0 probes every entry.
    std::size_t fd_entries_per_block = 8;
    std::size_t gradient_nodes = 5;
    int audit_graphs = 50;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const CheckSettings& s);
CheckSettings check_settings_from_json(const nlohmann::json& j);

struct CheckResult {
    std::string name;
    bool passed = false;
    double error = 0.0;
    double tolerance = 0.0;
    int trials = 0;
    double seconds = 0.0;
    std::string detail;
};

nlohmann::json to_json(const CheckResult& r);

/// Connected random graph: a random spanning tree plus each remaining pair
/// with probability `edge_prob`; Gaussian positions, velocities, features.
GeometricGraph random_graph(std::uint64_t seed, std::size_t nodes, std::size_t dim, std::size_t feature_width,
                            double edge_prob = 0.4);

/// Positions and position targets move by t; velocities only rotate.
GeometricGraph transform_graph(const GeometricGraph& g, const geom::EuclideanTransform& t);

/// Node i becomes node perm[i]; edges and 2-cells are relabelled to match.
GeometricGraph permute_graph(const GeometricGraph& g, const std::vector<std::uint32_t>& perm);

/// Messages per layer predicted from graph-level counts (degrees, ring
/// sizes, ring-edge incidences) without building a complex.
std::size_t expected_messages(const model::ModelConfig& config, const GeometricGraph& graph,
                              const std::vector<VertexCycle>& rings);

// Each check builds a fresh model from `config` with init_seed = settings.seed.
// Scalar checks force a scalar readout.
CheckResult check_scalar_invariance(const model::ModelConfig& config, const LiftConfig& lift, const CheckSettings& s);
CheckResult check_position_equivariance(const model::ModelConfig& config, const LiftConfig& lift,
                                        const CheckSettings& s);
CheckResult check_permutation_equivariance(const model::ModelConfig& config, const LiftConfig& lift,
                                           const CheckSettings& s);
CheckResult check_gradient(const model::ModelConfig& config, const LiftConfig& lift, const CheckSettings& s);
CheckResult check_message_count(const model::ModelConfig& config, const LiftConfig& lift, const CheckSettings& s);

std::vector<CheckResult> run_all_checks(const model::ModelConfig& config, const LiftConfig& lift,
                                        const CheckSettings& s);

}  // namespace empcn::checks
