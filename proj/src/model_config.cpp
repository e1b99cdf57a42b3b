#include "empcn/model_config.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace empcn::model {

using inv::MessageKind;

std::string to_string(Readout r) { return r == Readout::Positions ? "positions" : "scalar"; }

Readout readout_from_string(const std::string& s) {
    if (s == "positions") return Readout::Positions;
    if (s == "scalar") return Readout::Scalar;
    throw std::invalid_argument("unknown readout \"" + s + "\"");
}

std::vector<MessageKind> default_coupled_channels() {
    return {
        {0, 0, Adjacency::Upper},    {0, 1, Adjacency::Boundary}, {1, 0, Adjacency::Coboundary},
        {1, 1, Adjacency::Lower},    {1, 2, Adjacency::Boundary}, {2, 1, Adjacency::Coboundary},
    };
}

std::vector<MessageKind> default_decoupled_channels() {
    return {{0, 0, Adjacency::Upper}, {2, 0, Adjacency::Point}};
}

std::vector<MessageKind> ModelConfig::channels() const {
    auto out = messages.empty() ? (decoupled ? default_decoupled_channels() : default_coupled_channels()) : messages;
    const MessageKind n2r{0, 2, Adjacency::Point};
    if (decoupled && node_to_ring && std::find(out.begin(), out.end(), n2r) == out.end()) out.push_back(n2r);
    return out;
}

std::vector<inv::Invariant> ModelConfig::schema(const MessageKind& kind) const {
    if (strip_higher_order_invariants && std::max(kind.sender_rank, kind.receiver_rank) > 0) return {};
    return invariants.schema(kind);
}

std::vector<int> ModelConfig::active_ranks() const {
    std::set<int> r{0};
    for (const auto& k : channels()) {
        r.insert(k.sender_rank);
        r.insert(k.receiver_rank);
    }
    return {r.begin(), r.end()};
}

bool ModelConfig::rank_active(int rank) const {
    const auto r = active_ranks();
    return std::find(r.begin(), r.end(), rank) != r.end();
}

int ModelConfig::slot(const MessageKind& kind) const {
    if (!decoupled) return 0;
    return kind.sender_rank == 0 && kind.receiver_rank == 0 ? 0 : 1;
}

bool ModelConfig::uses_witness(const MessageKind& kind) const {
    if (kind.adjacency != Adjacency::Upper) return false;
    const int w = kind.sender_rank + 1;
    // Witness states exist only on the complex that carries that rank's states.
    return rank_active(w) && slot(kind) == (decoupled ? 1 : 0);
}

int ModelConfig::position_channel() const {
    const auto ch = channels();
    for (std::size_t i = 0; i < ch.size(); ++i)
        if (ch[i].sender_rank == 0 && ch[i].receiver_rank == 0) return static_cast<int>(i);
    return -1;
}

void ModelConfig::validate() const {
    if (num_layers < 0) throw std::invalid_argument("model.num_layers must be >= 0");
    if (hidden_width == 0) throw std::invalid_argument("model.hidden_width must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("model.dropout must be in [0, 1)");
    if (!(decoupled_split > 0.0 && decoupled_split < 1.0))
        throw std::invalid_argument("model.decoupled_split must be in (0, 1)");
    invariants.validate();
    const auto ch = channels();
    std::set<MessageKind> seen;
    for (const auto& k : ch) {
        check_adjacency_ranks(k.adjacency, k.sender_rank, k.receiver_rank);
        if (!seen.insert(k).second) throw std::invalid_argument("duplicate message channel " + inv::to_string(k));
        for (auto i : schema(k)) inv::check_applicable(i, k);
    }
    if (decoupled) {
        const MessageKind dense{0, 0, Adjacency::Upper};
        const MessageKind r2n{2, 0, Adjacency::Point};
        if (!seen.count(dense) || !seen.count(r2n))
            throw std::invalid_argument("decoupled model needs the 0->0:upper and 2->0:point channels");
        if (rank_active(1)) throw std::invalid_argument("decoupled model carries no edge states");
    }
    if (position_update && position_channel() < 0)
        throw std::invalid_argument("position_update needs a node->node channel");
}

nlohmann::json to_json(const ModelConfig& c) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& k : c.channels()) msgs.push_back(inv::to_string(k));
    return {
        {"num_layers", c.num_layers},
        {"hidden_width", c.hidden_width},
        {"messages", msgs},
        {"invariants", inv::to_json(c.invariants)},
        {"position_update", c.position_update},
        {"velocity_input", c.velocity_input},
        {"decoupled", c.decoupled},
        {"decoupled_split", c.decoupled_split},
        {"node_to_ring", c.node_to_ring},
        {"gate", c.gate},
        {"dropout", c.dropout},
        {"readout", to_string(c.readout)},
        {"strip_higher_order_invariants", c.strip_higher_order_invariants},
        {"debug_leak_coordinates", c.debug_leak_coordinates},
        {"init_seed", c.init_seed},
    };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw std::invalid_argument("model config must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const auto& v = it.value();
        if (k == "num_layers") c.num_layers = v.get<int>();
        else if (k == "hidden_width") c.hidden_width = v.get<std::size_t>();
        else if (k == "messages") {
            c.messages.clear();
            for (const auto& s : v) c.messages.push_back(inv::message_kind_from_string(s.get<std::string>()));
        } else if (k == "invariants") c.invariants = inv::invariant_config_from_json(v);
        else if (k == "position_update") c.position_update = v.get<bool>();
        else if (k == "velocity_input") c.velocity_input = v.get<bool>();
        else if (k == "decoupled") c.decoupled = v.get<bool>();
        else if (k == "decoupled_split") c.decoupled_split = v.get<double>();
        else if (k == "node_to_ring") c.node_to_ring = v.get<bool>();
        else if (k == "gate") c.gate = v.get<bool>();
        else if (k == "dropout") c.dropout = v.get<double>();
        else if (k == "readout") c.readout = readout_from_string(v.get<std::string>());
        else if (k == "strip_higher_order_invariants") c.strip_higher_order_invariants = v.get<bool>();
        else if (k == "debug_leak_coordinates") c.debug_leak_coordinates = v.get<bool>();
        else if (k == "init_seed") c.init_seed = v.get<std::uint64_t>();
        else throw std::invalid_argument("unknown model config key \"" + k + "\"");
    }
    c.validate();
    return c;
}

}  // namespace empcn::model
