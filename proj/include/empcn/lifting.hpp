#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "empcn/complex.hpp"
#include "empcn/graph.hpp"

namespace empcn {

enum class LiftMethod { ChordlessCycles, Cliques, VietorisRips, Template };

std::string to_string(LiftMethod m);
LiftMethod lift_method_from_string(const std::string& s);

struct LiftConfig {
    LiftMethod method = LiftMethod::ChordlessCycles;
    int max_ring_size = 6;
    double vr_radius = 0.0;              // vietoris-rips only
    std::vector<VertexCycle> templates;  // template only

    void validate() const;
};

nlohmann::json to_json(const LiftConfig& c);
LiftConfig lift_config_from_json(const nlohmann::json& j);

/// All chordless cycles of length 3..max_ring_size, canonical form, sorted.
/// Parallel over start vertices; output order does not depend on threading.
std::vector<VertexCycle> lift_rings(const GeometricGraph& graph, int max_ring_size);

namespace serial {
std::vector<VertexCycle> lift_rings(const GeometricGraph& graph, int max_ring_size);
}

/// simplices[k] holds every (k+1)-clique as a sorted vertex list, k <= max_dim.
using SimplexLists = std::vector<std::vector<std::vector<std::uint32_t>>>;
SimplexLists lift_cliques(const GeometricGraph& graph, int max_dim);

struct RipsComplex {
    GeometricGraph graph;
    SimplexLists simplices;
};

/// Edge (i, j) iff distance <= radius (inclusive).
RipsComplex vietoris_rips(const std::vector<geom::Point>& positions, double radius, int max_dim);

/// Inserts any template edge missing from `graph`, then returns the templates
/// as 2-cells.
std::vector<VertexCycle> template_lift(GeometricGraph& graph, const std::vector<VertexCycle>& templates);

/// Runs the configured lifting. May add edges to `graph` (template method) or
/// replace its edge set (vietoris-rips).
std::vector<VertexCycle> lift(GeometricGraph& graph, const LiftConfig& config);

struct DecoupledInput {
    GeometricGraph dense_graph;  // same nodes, all |V|(|V|-1)/2 edges
    GeometricGraph lifted_graph; // original topology (plus template edges)
    CWComplex lifted;
};

/// Splits the input into a fully connected node graph and a cellular lift of
/// the original topology.
DecoupledInput decouple(const GeometricGraph& graph, const LiftConfig& config);

}  // namespace empcn
