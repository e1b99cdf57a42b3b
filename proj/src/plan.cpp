#include "empcn/plan.hpp"

#include <stdexcept>

namespace empcn::model {

namespace {

using nn::Matrix;

CellTable make_table(const CWComplex& c, int rank) {
    CellTable t;
    t.count = c.num_cells(rank);
    t.vertex_offset.push_back(0);
    for (const Cell& cell : c.cells(rank)) {
        const auto id = cell.id.index;
        for (auto v : cell.vertices) {
            t.vertex.push_back(v);
            t.vertex_cell.push_back(id);
        }
        t.vertex_offset.push_back(t.vertex.size());
        if (rank == 1) {
            t.end_a.push_back(cell.vertices[0]);
            t.end_b.push_back(cell.vertices[1]);
        }
        if (rank == 2) {
            for (CellId e : cell.boundary) {
                const auto& ev = c.cell(e).vertices;
                t.perim_a.push_back(ev[0]);
                t.perim_b.push_back(ev[1]);
                t.perim_cell.push_back(id);
            }
            const auto& vs = cell.vertices;
            for (std::size_t i = 0; i < vs.size(); ++i)
                for (std::size_t j = i + 1; j < vs.size(); ++j) {
                    t.pair_a.push_back(vs[i]);
                    t.pair_b.push_back(vs[j]);
                    t.pair_cell.push_back(id);
                }
        }
    }
    return t;
}

ChannelPlan make_channel(const CWComplex& c, const inv::MessageKind& kind, int slot, bool witness) {
    ChannelPlan ch;
    ch.kind = kind;
    ch.slot = slot;
    ch.witness = witness;
    std::vector<std::uint32_t> recv, send, wit;
    for (std::uint32_t i = 0; i < c.num_cells(kind.receiver_rank); ++i) {
        for (const Incoming& in : incoming(c, kind.adjacency, CellId{kind.receiver_rank, i}, kind.sender_rank)) {
            recv.push_back(i);
            send.push_back(in.sender.index);
            if (witness) wit.push_back(in.witness.index);
        }
    }
    ch.recv = nn::make_index(std::move(recv));
    ch.send = nn::make_index(std::move(send));
    ch.wit = nn::make_index(std::move(wit));
    return ch;
}

void append_offset(std::vector<std::uint32_t>& dst, const std::vector<std::uint32_t>& src, std::size_t off) {
    for (auto v : src) dst.push_back(static_cast<std::uint32_t>(v + off));
}

void append_rows(Matrix& dst, const Matrix& src) {
    if (src.rows == 0) return;
    if (dst.rows == 0) dst.cols = src.cols;
    if (dst.cols != src.cols) throw std::invalid_argument("concat_plans: column mismatch");
    dst.data.insert(dst.data.end(), src.data.begin(), src.data.end());
    dst.rows += src.rows;
}

}  // namespace

std::size_t Plan::message_count() const {
    std::size_t n = 0;
    for (const auto& ch : channels) n += ch.recv->size();
    return n;
}

Plan build_plan(const GeometricGraph& g, std::span<const VertexCycle> rings, const ModelConfig& config) {
    g.validate();
    const std::size_t n = g.num_nodes();
    Plan p;
    p.num_graphs = 1;
    p.num_nodes = n;
    p.dim = g.dim();
    p.feature_width = g.feature_width();

    std::vector<CWComplex> complexes;
    if (config.decoupled) {
        const auto all = complete_edges(n);
        complexes.push_back(build_complex(n, all, {}));
        complexes.push_back(build_complex(g, rings));
    } else {
        complexes.push_back(build_complex(g, rings));
    }
    p.num_slots = static_cast<int>(complexes.size());
    for (std::size_t s = 0; s < complexes.size(); ++s)
        for (int r = 0; r <= kMaxRank; ++r) p.tables[s][static_cast<std::size_t>(r)] = make_table(complexes[s], r);

    const int state_slot = config.decoupled ? 1 : 0;
    for (int r = 0; r <= kMaxRank; ++r) {
        const auto ru = static_cast<std::size_t>(r);
        if (!config.rank_active(r)) {
            p.graph_of[ru] = nn::make_index({});
            p.features[ru] = Matrix(0, p.feature_width);
            continue;
        }
        const CellTable& t = p.table(state_slot, r);
        p.state_count[ru] = t.count;
        p.graph_of[ru] = nn::make_index(std::vector<std::uint32_t>(t.count, 0));
        Matrix f(t.count, p.feature_width);
        for (std::size_t c = 0; c < t.count; ++c) {
            const auto b = t.vertex_offset[c], e = t.vertex_offset[c + 1];
            for (auto k = b; k < e; ++k)
                for (std::size_t j = 0; j < p.feature_width; ++j) f(c, j) += g.node_features[t.vertex[k]][j];
            for (std::size_t j = 0; j < p.feature_width; ++j) f(c, j) /= static_cast<double>(e - b);
        }
        p.features[ru] = std::move(f);
    }

    p.positions = Matrix(n, p.dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < p.dim; ++k) p.positions(i, k) = g.positions[i][k];
    p.velocities = Matrix(n, p.dim);
    if (g.velocities) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < p.dim; ++k) p.velocities(i, k) = (*g.velocities)[i][k];
    } else if (config.velocity_input && config.position_update) {
        throw std::invalid_argument("model expects velocities but the graph has none");
    }
    p.inv_c = Matrix(n, 1, n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0);

    for (const auto& kind : config.channels()) {
        const int slot = config.slot(kind);
        p.channels.push_back(make_channel(complexes[static_cast<std::size_t>(slot)], kind, slot, config.uses_witness(kind)));
    }

    if (const auto* t = std::get_if<std::vector<geom::Point>>(&g.target)) {
        p.target_positions = Matrix(n, p.dim);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < p.dim; ++k) p.target_positions(i, k) = (*t)[i][k];
    } else if (const auto* s = std::get_if<double>(&g.target)) {
        p.target_scalar.push_back(*s);
    }
    return p;
}

Plan prepare_sample(const GeometricGraph& graph, const LiftConfig& lift_config, const ModelConfig& config) {
    if (graph.two_cells) return build_plan(graph, *graph.two_cells, config);
    GeometricGraph g = graph;
    const auto rings = lift(g, lift_config);
    return build_plan(g, rings, config);
}

Plan concat_plans(std::span<const Plan* const> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_plans: nothing to concatenate");
    const Plan& first = *parts.front();
    Plan out;
    out.dim = first.dim;
    out.feature_width = first.feature_width;
    out.num_slots = first.num_slots;
    out.positions = Matrix(0, first.dim);
    out.velocities = Matrix(0, first.dim);
    out.inv_c = Matrix(0, 1);
    for (auto& f : out.features) f = Matrix(0, first.feature_width);

    std::array<std::vector<std::uint32_t>, 3> graph_of;
    std::vector<std::vector<std::uint32_t>> recv(first.channels.size()), send(first.channels.size()),
        wit(first.channels.size());
    bool all_pos_targets = true;
    for (const Plan* pp : parts) all_pos_targets = all_pos_targets && pp->target_positions.rows > 0;
    if (all_pos_targets) out.target_positions = Matrix(0, first.dim);

    std::array<std::array<std::size_t, 3>, 2> cell_off{};
    std::size_t node_off = 0;
    for (const Plan* pp : parts) {
        const Plan& p = *pp;
        if (p.dim != first.dim || p.feature_width != first.feature_width || p.num_slots != first.num_slots ||
            p.channels.size() != first.channels.size())
            throw std::invalid_argument("concat_plans: plans come from different configurations or data shapes");
        for (int s = 0; s < p.num_slots; ++s)
            for (std::size_t r = 0; r < 3; ++r) {
                const CellTable& src = p.tables[static_cast<std::size_t>(s)][r];
                CellTable& dst = out.tables[static_cast<std::size_t>(s)][r];
                const std::size_t co = cell_off[static_cast<std::size_t>(s)][r];
                if (dst.vertex_offset.empty()) dst.vertex_offset.push_back(0);
                append_offset(dst.vertex, src.vertex, node_off);
                append_offset(dst.vertex_cell, src.vertex_cell, co);
                for (std::size_t k = 1; k < src.vertex_offset.size(); ++k)
                    dst.vertex_offset.push_back(src.vertex_offset[k] + dst.vertex_offset[co]);
                append_offset(dst.end_a, src.end_a, node_off);
                append_offset(dst.end_b, src.end_b, node_off);
                append_offset(dst.perim_a, src.perim_a, node_off);
                append_offset(dst.perim_b, src.perim_b, node_off);
                append_offset(dst.perim_cell, src.perim_cell, co);
                append_offset(dst.pair_a, src.pair_a, node_off);
                append_offset(dst.pair_b, src.pair_b, node_off);
                append_offset(dst.pair_cell, src.pair_cell, co);
                dst.count += src.count;
            }
        for (std::size_t c = 0; c < p.channels.size(); ++c) {
            const ChannelPlan& ch = p.channels[c];
            if (ch.kind != first.channels[c].kind) throw std::invalid_argument("concat_plans: channel lists differ");
            const int sr = ch.kind.sender_rank, rr = ch.kind.receiver_rank;
            auto off = [&](int rank) {
                return rank == 0 ? node_off : cell_off[static_cast<std::size_t>(ch.slot)][static_cast<std::size_t>(rank)];
            };
            append_offset(recv[c], *ch.recv, off(rr));
            append_offset(send[c], *ch.send, off(sr));
            if (ch.witness) append_offset(wit[c], *ch.wit, off(sr + 1));
        }
        for (std::size_t r = 0; r < 3; ++r) {
            for (auto gidx : *p.graph_of[r]) graph_of[r].push_back(static_cast<std::uint32_t>(gidx + out.num_graphs));
            out.state_count[r] += p.state_count[r];
            append_rows(out.features[r], p.features[r]);
        }
        append_rows(out.positions, p.positions);
        append_rows(out.velocities, p.velocities);
        append_rows(out.inv_c, p.inv_c);
        if (all_pos_targets) append_rows(out.target_positions, p.target_positions);
        out.target_scalar.insert(out.target_scalar.end(), p.target_scalar.begin(), p.target_scalar.end());

        for (int s = 0; s < p.num_slots; ++s)
            for (std::size_t r = 0; r < 3; ++r)
                cell_off[static_cast<std::size_t>(s)][r] += p.tables[static_cast<std::size_t>(s)][r].count;
        node_off += p.num_nodes;
        out.num_graphs += p.num_graphs;
    }
    out.num_nodes = node_off;
    for (std::size_t r = 0; r < 3; ++r) out.graph_of[r] = nn::make_index(std::move(graph_of[r]));
    for (std::size_t c = 0; c < first.channels.size(); ++c) {
        ChannelPlan ch = first.channels[c];
        ch.recv = nn::make_index(std::move(recv[c]));
        ch.send = nn::make_index(std::move(send[c]));
        ch.wit = nn::make_index(std::move(wit[c]));
        out.channels.push_back(std::move(ch));
    }
    if (out.target_scalar.size() != out.num_graphs) out.target_scalar.clear();
    return out;
}

}  // namespace empcn::model
