#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"

#include "empcn/model_config.hpp"
#include "empcn/nn/params.hpp"
#include "empcn/nn/tape.hpp"
#include "empcn/plan.hpp"

namespace empcn::model {

struct ChannelIds {
    nn::DenseIds lin1, lin2, gate;
};

struct UpdateIds {
    nn::DenseIds self, lin2;
    std::vector<std::pair<std::size_t, nn::DenseIds>> from;  // (channel, block)
};

struct LayerIds {
    std::vector<ChannelIds> channels;
    std::array<std::optional<UpdateIds>, 3> update;
    nn::DenseIds phi_v1{}, phi_v2{}, phi_x{};
};

struct Model {
    ModelConfig config;
    std::size_t feature_width = 0;
    std::size_t dim = 0;
    /// Hidden width per rank; 0 for inactive ranks. Rank 2 is the ring
    /// branch width in a decoupled model.
    std::array<std::size_t, 3> width{};
    nn::Params params;

    std::array<std::optional<nn::DenseIds>, 3> embed;
    std::vector<LayerIds> layers;
    std::array<std::optional<std::pair<nn::DenseIds, nn::DenseIds>>, 3> pre_readout;
    nn::DenseIds head1{}, head2{};

    std::size_t message_width(const inv::MessageKind& kind) const;
    /// Width of [h_recv, h_send, h_witness?, invariants, leaked coordinates?].
    std::size_t message_input_width(const inv::MessageKind& kind) const;
    /// Parameters belonging to the ring branch (rank-2 states and point channels).
    std::size_t ring_branch_count() const;
};

/// Parameters are initialized from a generator seeded by (init_seed, key), so
/// blocks with the same key and shape agree across configurations. A
/// decoupled model picks the ring width whose parameter share is closest to
/// 1 - decoupled_split and throws if it misses by more than 0.02.
Model build_model(const ModelConfig& config, std::size_t feature_width, std::size_t dim);

struct ForwardOptions {
    bool training = false;
    std::uint64_t dropout_seed = 0;
};

struct ForwardOutput {
    nn::Var positions{};  // final node positions (N×dim)
    std::optional<nn::Var> scalar;  // num_graphs×1 for scalar readout
    std::vector<std::size_t> messages_per_layer;
};

ForwardOutput forward(nn::Tape& tape, const Model& model, const Plan& plan, const ForwardOptions& options = {});

/// Differentiable invariant columns for every channel of `plan` at
/// `positions` (empty for channels without invariants); exposed for testing
/// against the plain evaluation.
std::vector<std::optional<nn::Var>> invariant_columns(nn::Tape& tape, const Model& model, const Plan& plan, nn::Var positions);

nlohmann::json checkpoint_to_json(const Model& model);
Model model_from_checkpoint(const nlohmann::json& j);

}  // namespace empcn::model
