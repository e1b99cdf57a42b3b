#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "empcn/invariants.hpp"

namespace empcn::model {

enum class Readout { Positions, Scalar };
std::string to_string(Readout r);
Readout readout_from_string(const std::string& s);

struct ModelConfig {
    int num_layers = 4;
    std::size_t hidden_width = 32;
    /// Message channels; empty selects the default list for the mode.
    std::vector<inv::MessageKind> messages;
    inv::InvariantConfig invariants;
    bool position_update = true;
    bool velocity_input = true;
    bool decoupled = false;
    /// Share of parameters in the node branch of a decoupled model.
    double decoupled_split = 0.75;
    /// Decoupled only: also send node -> ring messages over point adjacency.
    bool node_to_ring = false;
    bool gate = true;
    double dropout = 0.0;
    Readout readout = Readout::Positions;
    /// Drops every invariant from channels that involve edges or rings.
    bool strip_higher_order_invariants = false;
    /// Negative control: appends raw receiver coordinates to message inputs.
    bool debug_leak_coordinates = false;
    std::uint64_t init_seed = 0;

    /// Channels in evaluation order, after defaults and node_to_ring.
    std::vector<inv::MessageKind> channels() const;
    /// Invariant schema actually fed to a channel's message function.
    std::vector<inv::Invariant> schema(const inv::MessageKind& kind) const;
    /// Ranks with hidden states: rank 0 plus every rank a channel touches.
    std::vector<int> active_ranks() const;
    bool rank_active(int rank) const;
    /// Whether a channel appends the shared co-boundary's state.
    bool uses_witness(const inv::MessageKind& kind) const;
    /// Complex a channel runs on: 0 = the graph's own complex (coupled) or
    /// the dense node graph (decoupled node->node); 1 = the lifted complex of
    /// a decoupled model.
    int slot(const inv::MessageKind& kind) const;
    /// First node->node channel, which drives the position update; -1 if none.
    int position_channel() const;

    void validate() const;
};

std::vector<inv::MessageKind> default_coupled_channels();
std::vector<inv::MessageKind> default_decoupled_channels();

nlohmann::json to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace empcn::model
