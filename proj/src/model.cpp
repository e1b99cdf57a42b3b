#include "empcn/model.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "empcn/invariants.hpp"
#include "empcn/nn/optim.hpp"

namespace empcn::model {

using inv::Invariant;
using inv::MessageKind;
using nn::Index;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

std::uint64_t key_seed(std::uint64_t seed, const std::string& key) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : key) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = seed ^ h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

nn::DenseIds keyed_dense(nn::Params& p, std::uint64_t seed, const std::string& key, std::size_t in, std::size_t out,
                         bool bias = true) {
    std::mt19937_64 rng(key_seed(seed, key));
    return nn::add_dense(p, rng, key, in, out, bias);
}

bool is_ring_branch(const std::string& key) {
    return key.find("rank2") != std::string::npos || key.find(":point") != std::string::npos;
}

std::vector<int> pooled_ranks(const ModelConfig& c) {
    if (c.decoupled) return {0};
    return c.active_ranks();
}

void build_params(Model& m, std::size_t ring_width) {
    const ModelConfig& c = m.config;
    const std::size_t h = c.hidden_width;
    m.params = nn::Params{};
    m.width = {h, c.rank_active(1) ? h : 0, c.rank_active(2) ? (c.decoupled ? ring_width : h) : 0};
    m.embed = {};
    m.layers.clear();
    m.pre_readout = {};
    const auto seed = c.init_seed;
    auto& p = m.params;

    for (int r = 0; r <= kMaxRank; ++r)
        if (c.rank_active(r))
            m.embed[static_cast<std::size_t>(r)] =
                keyed_dense(p, seed, "embed/rank" + std::to_string(r), m.feature_width, m.width[static_cast<std::size_t>(r)]);

    const auto channels = c.channels();
    for (int l = 0; l < c.num_layers; ++l) {
        const std::string lp = "layer" + std::to_string(l) + "/";
        LayerIds ids;
        for (const auto& kind : channels) {
            const std::string ks = inv::to_string(kind);
            const std::size_t out = m.message_width(kind);
            ChannelIds ch;
            ch.lin1 = keyed_dense(p, seed, lp + "message/" + ks + "/lin1", m.message_input_width(kind), out);
            ch.lin2 = keyed_dense(p, seed, lp + "message/" + ks + "/lin2", out, out);
            if (c.gate) ch.gate = keyed_dense(p, seed, lp + "gate/" + ks, out, 1);
            ids.channels.push_back(ch);
        }
        for (int r = 0; r <= kMaxRank; ++r) {
            const auto ru = static_cast<std::size_t>(r);
            UpdateIds u;
            for (std::size_t ci = 0; ci < channels.size(); ++ci)
                if (channels[ci].receiver_rank == r) {
                    const std::string key = lp + "update/rank" + std::to_string(r) + "/from/" + inv::to_string(channels[ci]);
                    u.from.emplace_back(ci, keyed_dense(p, seed, key, m.message_width(channels[ci]), m.width[ru], false));
                }
            if (u.from.empty()) continue;
            const std::string up = lp + "update/rank" + std::to_string(r);
            u.self = keyed_dense(p, seed, up + "/self", m.width[ru], m.width[ru]);
            u.lin2 = keyed_dense(p, seed, up + "/lin2", m.width[ru], m.width[ru]);
            ids.update[ru] = u;
        }
        if (c.position_update) {
            if (c.velocity_input) {
                ids.phi_v1 = keyed_dense(p, seed, lp + "position/phi_v/lin1", h, h);
                ids.phi_v2 = keyed_dense(p, seed, lp + "position/phi_v/lin2", h, 1);
            }
            const auto& pk = channels[static_cast<std::size_t>(c.position_channel())];
            ids.phi_x = keyed_dense(p, seed, lp + "position/phi_x", m.message_width(pk), 1, false);
        }
        m.layers.push_back(std::move(ids));
    }

    if (c.readout == Readout::Scalar) {
        std::size_t pooled = 0;
        for (int r : pooled_ranks(c)) {
            const auto ru = static_cast<std::size_t>(r);
            const std::string rp = "readout/rank" + std::to_string(r);
            m.pre_readout[ru] = std::make_pair(keyed_dense(p, seed, rp + "/lin1", m.width[ru], m.width[ru]),
                                               keyed_dense(p, seed, rp + "/lin2", m.width[ru], m.width[ru]));
            pooled += m.width[ru];
        }
        m.head1 = keyed_dense(p, seed, "head/lin1", pooled, h);
        m.head2 = keyed_dense(p, seed, "head/lin2", h, 1);
    }
}

Var dense_mlp2(Tape& t, Var x, const nn::DenseIds& a, const nn::DenseIds& b) {
    return t.swish(t.dense(t.swish(t.dense(x, a)), b));
}

/// Geometric quantities of the current positions, recorded on the tape and
/// cached per complex slot.
class Geometry {
public:
    Geometry(Tape& t, const Plan& p, Var x) : t_(t), p_(p), x_(x) {}

    Var positions() const { return x_; }

    Var midpoints(int slot, int rank) {
        if (rank == 0) return x_;
        auto key = std::make_pair(slot, rank);
        if (auto it = mid_.find(key); it != mid_.end()) return it->second;
        const CellTable& tb = p_.table(slot, rank);
        Var v = t_.segment_mean(t_.gather(x_, idx(tb.vertex)), idx(tb.vertex_cell), tb.count);
        mid_.emplace(key, v);
        return v;
    }

    Var edge_lengths(int slot) {
        if (auto it = edge_.find(slot); it != edge_.end()) return it->second;
        const CellTable& tb = p_.table(slot, 1);
        Var v = dist(idx(tb.end_a), idx(tb.end_b));
        edge_.emplace(slot, v);
        return v;
    }

    Var ring_radius(int slot) {
        if (auto it = radius_.find(slot); it != radius_.end()) return it->second;
        const CellTable& tb = p_.table(slot, 2);
        Var d = dist(idx(tb.pair_a), idx(tb.pair_b));
        Var v = t_.scale(t_.segment_max(d, idx(tb.pair_cell), tb.count), 0.5);
        radius_.emplace(slot, v);
        return v;
    }

    Var ring_perimeter(int slot) {
        if (auto it = perim_.find(slot); it != perim_.end()) return it->second;
        const CellTable& tb = p_.table(slot, 2);
        Var v = t_.segment_sum(dist(idx(tb.perim_a), idx(tb.perim_b)), idx(tb.perim_cell), tb.count);
        perim_.emplace(slot, v);
        return v;
    }

    Var vertex_counts(int slot) {
        const CellTable& tb = p_.table(slot, 2);
        Matrix m(tb.count, 1);
        for (std::size_t c = 0; c < tb.count; ++c)
            m.data[c] = static_cast<double>(tb.vertex_offset[c + 1] - tb.vertex_offset[c]);
        return t_.constant(std::move(m));
    }

    std::pair<Var, Var> hull(int slot) {
        if (auto it = hull_.find(slot); it != hull_.end()) return it->second;
        auto v = build_hull(slot);
        hull_.emplace(slot, v);
        return v;
    }

private:
    static Index idx(const std::vector<std::uint32_t>& v) { return nn::make_index(v); }

    Var dist(const Index& a, const Index& b) { return t_.row_norm(t_.sub(t_.gather(x_, a), t_.gather(x_, b))); }

    // Mirrors inv::hull_measure: the combinatorial hull comes from the current
    // values; volume and area are then sums of recorded simplex measures.
    std::pair<Var, Var> build_hull(int slot) {
        using Kind = inv::HullDecomposition::Kind;
        const CellTable& tb = p_.table(slot, 2);
        const Matrix& xv = t_.value(x_);
        const std::size_t d = p_.dim;
        if (d != 2 && d != 3) throw std::invalid_argument("hull invariants need 2D or 3D positions");
        std::vector<std::uint32_t> apex_v, apex_cell;
        std::vector<std::uint32_t> tet_a, tet_b, tet_c, tet_cell;
        std::vector<std::uint32_t> fan_a, fan_b, fan_cell;
        std::vector<std::uint32_t> seg_a, seg_b, seg_cell;
        for (std::uint32_t r = 0; r < tb.count; ++r) {
            std::vector<geom::Point> pts;
            const auto b = tb.vertex_offset[r];
            for (auto k = b; k < tb.vertex_offset[r + 1]; ++k) {
                const double* row = xv.row(tb.vertex[k]);
                pts.emplace_back(std::vector<double>(row, row + d));
            }
            const auto h = inv::hull_decompose(pts);
            auto gid = [&](std::uint32_t local) { return tb.vertex[b + local]; };
            if (h.kind == Kind::Degenerate) continue;
            for (auto v : h.vertices) {
                apex_v.push_back(gid(v));
                apex_cell.push_back(r);
            }
            if (d == 3 && h.kind == Kind::Full) {
                for (const auto& f : h.facets) {
                    tet_a.push_back(gid(f[0]));
                    tet_b.push_back(gid(f[1]));
                    tet_c.push_back(gid(f[2]));
                    tet_cell.push_back(r);
                }
            } else if (h.kind == Kind::Flat && h.polygon.size() == 2) {
                seg_a.push_back(gid(h.polygon[0]));
                seg_b.push_back(gid(h.polygon[1]));
                seg_cell.push_back(r);
            } else {
                const std::size_t k = h.polygon.size();
                for (std::size_t i = 0; i < k; ++i) {
                    fan_a.push_back(gid(h.polygon[i]));
                    fan_b.push_back(gid(h.polygon[(i + 1) % k]));
                    fan_cell.push_back(r);
                    if (d == 2) {
                        seg_a.push_back(fan_a.back());
                        seg_b.push_back(fan_b.back());
                        seg_cell.push_back(r);
                    }
                }
            }
        }
        const std::size_t n = tb.count;
        Var volume = t_.constant(Matrix(n, 1));
        Var area = t_.constant(Matrix(n, 1));
        Var apex = t_.segment_mean(t_.gather(x_, idx(apex_v)), idx(apex_cell), n);
        auto g = [&](const std::vector<std::uint32_t>& v) { return t_.gather(x_, idx(v)); };
        if (!tet_cell.empty()) {
            Var o = t_.gather(apex, idx(tet_cell));
            Var a = g(tet_a), b = g(tet_b), c = g(tet_c);
            Var vol = t_.scale(t_.abs(t_.row_dot(t_.sub(a, o), t_.cross3(t_.sub(b, o), t_.sub(c, o)))), 1.0 / 6.0);
            Var tri = t_.scale(t_.row_norm(t_.cross3(t_.sub(b, a), t_.sub(c, a))), 0.5);
            volume = t_.add(volume, t_.segment_sum(vol, idx(tet_cell), n));
            area = t_.add(area, t_.segment_sum(tri, idx(tet_cell), n));
        }
        if (!fan_cell.empty()) {
            Var o = t_.gather(apex, idx(fan_cell));
            Var a = t_.sub(g(fan_a), o), b = t_.sub(g(fan_b), o);
            Var tri = d == 2 ? t_.scale(t_.abs(t_.cross2(a, b)), 0.5) : t_.scale(t_.row_norm(t_.cross3(a, b)), 0.5);
            Var sum = t_.segment_sum(tri, idx(fan_cell), n);
            if (d == 2) volume = t_.add(volume, sum);
            else area = t_.add(area, sum);
        }
        if (!seg_cell.empty()) area = t_.add(area, t_.segment_sum(dist(idx(seg_a), idx(seg_b)), idx(seg_cell), n));
        return {volume, area};
    }

    Tape& t_;
    const Plan& p_;
    Var x_;
    std::map<std::pair<int, int>, Var> mid_;
    std::map<int, Var> edge_, radius_, perim_;
    std::map<int, std::pair<Var, Var>> hull_;
};

Index compose(const std::vector<std::uint32_t>& table, const Index& at) {
    std::vector<std::uint32_t> out;
    out.reserve(at->size());
    for (auto i : *at) out.push_back(table[i]);
    return nn::make_index(std::move(out));
}

Var invariant_column(Tape& t, Geometry& geo, const Plan& p, const ChannelPlan& ch, Invariant which) {
    const MessageKind& k = ch.kind;
    const int s = ch.slot;
    const Index& ring_at = k.sender_rank == 2 ? ch.send : ch.recv;
    const Index& edge_at = k.sender_rank == 1 ? ch.send : ch.recv;
    switch (which) {
        case Invariant::NodeDistance:
            return t.row_norm(t.sub(t.gather(geo.positions(), ch.recv), t.gather(geo.positions(), ch.send)));
        case Invariant::EdgeLength: return t.gather(geo.edge_lengths(s), edge_at);
        case Invariant::SenderEdgeLength: return t.gather(geo.edge_lengths(s), ch.send);
        case Invariant::ReceiverEdgeLength: return t.gather(geo.edge_lengths(s), ch.recv);
        case Invariant::MidpointDistance:
        case Invariant::NodeToRingMidpoint:
            return t.row_norm(t.sub(t.gather(geo.midpoints(s, k.receiver_rank), ch.recv),
                                    t.gather(geo.midpoints(s, k.sender_rank), ch.send)));
        case Invariant::RingRadius: return t.gather(geo.ring_radius(s), ring_at);
        case Invariant::RingPerimeter: return t.gather(geo.ring_perimeter(s), ring_at);
        case Invariant::HullVolume: return t.gather(geo.hull(s).first, ring_at);
        case Invariant::HullArea: return t.gather(geo.hull(s).second, ring_at);
        case Invariant::VertexCount: return t.gather(geo.vertex_counts(s), ring_at);
        case Invariant::EdgeAngle: {
            const CellTable& tb = p.table(s, 1);
            Var x = geo.positions();
            Var a = t.sub(t.gather(x, compose(tb.end_b, ch.send)), t.gather(x, compose(tb.end_a, ch.send)));
            Var b = t.sub(t.gather(x, compose(tb.end_b, ch.recv)), t.gather(x, compose(tb.end_a, ch.recv)));
            return t.safe_div(t.abs(t.row_dot(a, b)), t.mul(t.row_norm(a), t.row_norm(b)));
        }
    }
    throw std::logic_error("unhandled invariant");
}

std::vector<std::optional<Var>> columns(Tape& t, Geometry& geo, const Model& m, const Plan& p) {
    std::vector<std::optional<Var>> out;
    for (const auto& ch : p.channels) {
        const auto schema = m.config.schema(ch.kind);
        if (schema.empty()) {
            out.emplace_back();
            continue;
        }
        std::vector<Var> cols;
        for (auto inv : schema) cols.push_back(invariant_column(t, geo, p, ch, inv));
        out.emplace_back(t.hcat(cols));
    }
    return out;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return key_seed(a, std::to_string(b)); }

}  // namespace

std::size_t Model::message_width(const MessageKind& kind) const {
    if (config.decoupled && (kind.sender_rank == 2 || kind.receiver_rank == 2)) return width[2];
    return config.hidden_width;
}

std::size_t Model::message_input_width(const MessageKind& kind) const {
    std::size_t w = width[static_cast<std::size_t>(kind.receiver_rank)] + width[static_cast<std::size_t>(kind.sender_rank)];
    if (config.uses_witness(kind)) w += width[static_cast<std::size_t>(kind.sender_rank + 1)];
    w += config.schema(kind).size();
    if (config.debug_leak_coordinates) w += dim;
    return w;
}

std::size_t Model::ring_branch_count() const {
    std::size_t n = 0;
    for (nn::ParamId i = 0; i < params.size(); ++i)
        if (is_ring_branch(params.key(i))) n += params[i].size();
    return n;
}

Model build_model(const ModelConfig& config, std::size_t feature_width, std::size_t dim) {
    config.validate();
    if (feature_width == 0) throw std::invalid_argument("model needs at least one node feature");
    if (dim == 0) throw std::invalid_argument("model needs positions of dimension >= 1");
    Model m;
    m.config = config;
    m.feature_width = feature_width;
    m.dim = dim;
    if (!config.decoupled) {
        build_params(m, config.hidden_width);
        return m;
    }
    const double target = 1.0 - config.decoupled_split;
    std::size_t best_w = 1;
    double best_err = 2.0;
    for (std::size_t w = 1; w <= 8 * config.hidden_width; ++w) {
        build_params(m, w);
        const double share = static_cast<double>(m.ring_branch_count()) / static_cast<double>(m.params.total_count());
        if (std::abs(share - target) < best_err) {
            best_err = std::abs(share - target);
            best_w = w;
        }
        if (share > target) break;
    }
    if (best_err > 0.02)
        throw std::invalid_argument("no ring width reaches the decoupled parameter split within 0.02 (best error " +
                                    std::to_string(best_err) + ")");
    build_params(m, best_w);
    return m;
}

std::vector<std::optional<Var>> invariant_columns(Tape& tape, const Model& model, const Plan& plan, Var positions) {
    Geometry geo(tape, plan, positions);
    return columns(tape, geo, model, plan);
}

ForwardOutput forward(Tape& t, const Model& m, const Plan& p, const ForwardOptions& opt) {
    const ModelConfig& c = m.config;
    if (p.feature_width != m.feature_width)
        throw std::invalid_argument("input has " + std::to_string(p.feature_width) + " node features, model expects " +
                                    std::to_string(m.feature_width));
    if (p.dim != m.dim)
        throw std::invalid_argument("input has dimension " + std::to_string(p.dim) + ", model expects " +
                                    std::to_string(m.dim));
    const auto channels = c.channels();
    if (p.channels.size() != channels.size()) throw std::invalid_argument("plan was built for a different channel list");
    for (std::size_t i = 0; i < channels.size(); ++i)
        if (p.channels[i].kind != channels[i]) throw std::invalid_argument("plan was built for a different channel list");
    if (c.decoupled != (p.num_slots == 2)) throw std::invalid_argument("plan and model disagree on decoupling");
    const bool dropout = opt.training && c.dropout > 0.0;

    ForwardOutput out;
    Var x = t.constant(p.positions);
    std::array<std::optional<Var>, 3> h;
    for (std::size_t r = 0; r < 3; ++r)
        if (m.embed[r]) h[r] = t.dense(t.constant(p.features[r]), *m.embed[r]);

    std::optional<Geometry> geo;
    std::vector<std::optional<Var>> inv_cols;
    const int pc = c.position_channel();
    for (int l = 0; l < c.num_layers; ++l) {
        const LayerIds& ids = m.layers[static_cast<std::size_t>(l)];
        if (l == 0 || c.position_update) {
            geo.emplace(t, p, x);
            inv_cols = columns(t, *geo, m, p);
        }
        std::vector<Var> pre(channels.size()), agg(channels.size());
        std::size_t count = 0;
        for (std::size_t ci = 0; ci < channels.size(); ++ci) {
            const ChannelPlan& ch = p.channels[ci];
            const auto rr = static_cast<std::size_t>(ch.kind.receiver_rank);
            const auto sr = static_cast<std::size_t>(ch.kind.sender_rank);
            count += ch.recv->size();
            std::vector<Var> parts{t.gather(*h[rr], ch.recv), t.gather(*h[sr], ch.send)};
            if (ch.witness) parts.push_back(t.gather(*h[sr + 1], ch.wit));
            if (inv_cols[ci]) parts.push_back(*inv_cols[ci]);
            if (c.debug_leak_coordinates)
                parts.push_back(t.gather(geo->midpoints(ch.slot, ch.kind.receiver_rank), ch.recv));
            Var msg = dense_mlp2(t, t.hcat(parts), ids.channels[ci].lin1, ids.channels[ci].lin2);
            if (dropout) {
                const auto& v = t.value(msg);
                msg = t.mul(msg, t.constant(nn::dropout_mask(v.rows, v.cols, c.dropout,
                                                             mix(opt.dropout_seed, static_cast<std::uint64_t>(l) * 64 + ci))));
            }
            pre[ci] = msg;
            Var gated = c.gate ? t.mul_rows(msg, t.sigmoid(t.dense(msg, ids.channels[ci].gate))) : msg;
            agg[ci] = t.segment_sum(gated, ch.recv, p.state_count[rr]);
        }
        out.messages_per_layer.push_back(count);

        std::array<std::optional<Var>, 3> next = h;
        for (std::size_t r = 0; r < 3; ++r) {
            if (!ids.update[r]) continue;
            const UpdateIds& u = *ids.update[r];
            Var acc = t.dense(*h[r], u.self);
            for (const auto& [ci, block] : u.from) acc = t.add(acc, t.dense(agg[ci], block));
            Var upd = t.dense(t.swish(acc), u.lin2);
            if (dropout) {
                const auto& v = t.value(upd);
                upd = t.mul(upd, t.constant(nn::dropout_mask(v.rows, v.cols, c.dropout,
                                                             mix(opt.dropout_seed, static_cast<std::uint64_t>(l) * 64 + 32 + r))));
            }
            next[r] = upd;
        }

        if (c.position_update) {
            const ChannelPlan& ch = p.channels[static_cast<std::size_t>(pc)];
            Var phi_x = t.dense(pre[static_cast<std::size_t>(pc)], ids.phi_x);
            Var diff = t.sub(t.gather(x, ch.recv), t.gather(x, ch.send));
            Var vel = t.mul_rows(t.segment_sum(t.mul_rows(diff, phi_x), ch.recv, p.num_nodes), t.constant(p.inv_c));
            if (c.velocity_input) {
                Var phi_v = t.dense(t.swish(t.dense(*h[0], ids.phi_v1)), ids.phi_v2);
                vel = t.add(t.mul_rows(t.constant(p.velocities), phi_v), vel);
            }
            x = t.add(x, vel);
        }
        h = next;
    }
    out.positions = x;

    if (c.readout == Readout::Scalar) {
        std::vector<Var> pooled;
        for (int r : pooled_ranks(c)) {
            const auto ru = static_cast<std::size_t>(r);
            const auto& [a, b] = *m.pre_readout[ru];
            Var z = t.dense(t.swish(t.dense(*h[ru], a)), b);
            pooled.push_back(t.segment_sum(z, p.graph_of[ru], p.num_graphs));
        }
        out.scalar = t.dense(t.swish(t.dense(t.hcat(pooled), m.head1)), m.head2);
    }
    return out;
}

nlohmann::json checkpoint_to_json(const Model& m) {
    return {
        {"format_version", nn::kCheckpointVersion},
        {"config", to_json(m.config)},
        {"feature_width", m.feature_width},
        {"dim", m.dim},
        {"params", nn::params_to_json(m.params)},
    };
}

Model model_from_checkpoint(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("format_version"))
        throw std::invalid_argument("checkpoint lacks a format_version field");
    if (j.at("format_version").get<int>() != nn::kCheckpointVersion)
        throw std::invalid_argument("unsupported checkpoint format_version " + j.at("format_version").dump());
    Model m = build_model(model_config_from_json(j.at("config")), j.at("feature_width").get<std::size_t>(),
                          j.at("dim").get<std::size_t>());
    nn::params_from_json(j.at("params"), m.params);
    return m;
}

}  // namespace empcn::model
