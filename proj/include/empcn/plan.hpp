#pragma once

#include <array>
#include <span>
#include <vector>

#include "empcn/complex.hpp"
#include "empcn/graph.hpp"
#include "empcn/lifting.hpp"
#include "empcn/model_config.hpp"
#include "empcn/nn/matrix.hpp"
#include "empcn/nn/tape.hpp"

namespace empcn::model {

/// Flattened cells of one rank of one complex. Vertex ids are global node
/// rows of the batch.
struct CellTable {
    std::size_t count = 0;
    std::vector<std::uint32_t> vertex;       // concatenated vertex lists
    std::vector<std::uint32_t> vertex_cell;  // owning cell of each entry
    std::vector<std::size_t> vertex_offset;  // count + 1
    std::vector<std::uint32_t> end_a, end_b;                   // rank 1
    std::vector<std::uint32_t> perim_a, perim_b, perim_cell;   // rank 2 boundary edges
    std::vector<std::uint32_t> pair_a, pair_b, pair_cell;      // rank 2 vertex pairs
};

/// Every message of one channel. Indices address the receiver's and
/// sender's state rows (or cell rows of the channel's complex).
struct ChannelPlan {
    inv::MessageKind kind;
    int slot = 0;
    bool witness = false;
    nn::Index recv, send, wit;
};

/// Model input for one graph or a disjoint union of graphs.
struct Plan {
    std::size_t num_graphs = 0;
    std::size_t num_nodes = 0;
    std::size_t dim = 0;
    std::size_t feature_width = 0;
    int num_slots = 1;
    std::array<std::array<CellTable, 3>, 2> tables;
    std::array<std::size_t, 3> state_count{};
    std::array<nn::Index, 3> graph_of;  // per state row
    std::array<nn::Matrix, 3> features;
    nn::Matrix positions;
    nn::Matrix velocities;
    nn::Matrix inv_c;  // N×1, 1/(|V_g| - 1)
    std::vector<ChannelPlan> channels;
    nn::Matrix target_positions;  // empty unless every graph has one
    std::vector<double> target_scalar;

    const CellTable& table(int slot, int rank) const { return tables[static_cast<std::size_t>(slot)][static_cast<std::size_t>(rank)]; }
    std::size_t message_count() const;
};

/// Builds the plan for one graph whose 2-cells are `rings`. In coupled mode
/// the complex is the graph plus rings; in decoupled mode a complete node
/// graph carries node->node channels and the graph plus rings carries the rest.
Plan build_plan(const GeometricGraph& graph, std::span<const VertexCycle> rings, const ModelConfig& config);

/// Uses the graph's own two_cells if present, otherwise lifts it.
Plan prepare_sample(const GeometricGraph& graph, const LiftConfig& lift_config, const ModelConfig& config);

Plan concat_plans(std::span<const Plan* const> parts);

}  // namespace empcn::model
