#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "json.hpp"

#include "empcn/geometry.hpp"

namespace empcn {

using VertexCycle = std::vector<std::uint32_t>;

struct Edge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Either no target, a scalar property, or per-node target positions.
using Target = std::variant<std::monostate, double, std::vector<geom::Point>>;

/// Node positions, optional velocities, node features and an undirected edge
/// list. `two_cells` is carried along when the graph has been lifted.
struct GeometricGraph {
    std::vector<geom::Point> positions;
    std::optional<std::vector<geom::Point>> velocities;
    std::vector<std::vector<double>> node_features;
    std::vector<Edge> edges;
    std::optional<std::vector<VertexCycle>> two_cells;
    Target target;
    nlohmann::json meta;  // null when absent

    std::size_t num_nodes() const { return positions.size(); }
    std::size_t dim() const { return positions.empty() ? 0 : positions.front().dim(); }
    std::size_t feature_width() const { return node_features.empty() ? 0 : node_features.front().size(); }
    bool has_edge(std::uint32_t a, std::uint32_t b) const;

    /// Throws std::invalid_argument on any structural violation.
    void validate() const;
};

/// All |V|(|V|-1)/2 undirected pairs, (i<j) in lexicographic order.
std::vector<Edge> complete_edges(std::size_t n);

}  // namespace empcn
