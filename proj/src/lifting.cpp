#include "empcn/lifting.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace empcn {

using nlohmann::json;

std::string to_string(LiftMethod m) {
    switch (m) {
        case LiftMethod::ChordlessCycles: return "chordless-cycles";
        case LiftMethod::Cliques: return "cliques";
        case LiftMethod::VietorisRips: return "vietoris-rips";
        case LiftMethod::Template: return "template";
    }
    return "?";
}

LiftMethod lift_method_from_string(const std::string& s) {
    for (auto m : {LiftMethod::ChordlessCycles, LiftMethod::Cliques, LiftMethod::VietorisRips, LiftMethod::Template})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown lift method \"" + s + "\"");
}

void LiftConfig::validate() const {
    if (max_ring_size < 3 || max_ring_size > 12) throw std::invalid_argument("max_ring_size must be in [3, 12]");
    if (method == LiftMethod::VietorisRips && !(vr_radius > 0.0))
        throw std::invalid_argument("vietoris-rips lifting requires vr_radius > 0");
    if (method != LiftMethod::VietorisRips && vr_radius != 0.0)
        throw std::invalid_argument("vr_radius is only valid for vietoris-rips lifting");
    if (method == LiftMethod::Template && templates.empty())
        throw std::invalid_argument("template lifting requires templates");
    if (method != LiftMethod::Template && !templates.empty())
        throw std::invalid_argument("templates are only valid for template lifting");
}

json to_json(const LiftConfig& c) {
    json j{{"method", to_string(c.method)}, {"max_ring_size", c.max_ring_size}};
    if (c.method == LiftMethod::VietorisRips) j["vr_radius"] = c.vr_radius;
    if (c.method == LiftMethod::Template) j["templates"] = c.templates;
    return j;
}

LiftConfig lift_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("lift config must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "method" && it.key() != "max_ring_size" && it.key() != "vr_radius" && it.key() != "templates")
            throw std::invalid_argument("unknown lift config key \"" + it.key() + "\"");
    LiftConfig c;
    c.method = lift_method_from_string(j.value("method", std::string("chordless-cycles")));
    c.max_ring_size = j.value("max_ring_size", 6);
    c.vr_radius = j.value("vr_radius", 0.0);
    if (j.contains("templates")) c.templates = j["templates"].get<std::vector<VertexCycle>>();
    c.validate();
    return c;
}

namespace {

struct AdjacencyIndex {
    std::size_t n = 0;
    std::vector<std::vector<std::uint32_t>> nbrs;
    std::vector<char> matrix;

    explicit AdjacencyIndex(const GeometricGraph& g) : n(g.num_nodes()), nbrs(n), matrix(n * n, 0) {
        for (const Edge& e : g.edges) {
            if (e.u == e.v || matrix[e.u * n + e.v]) continue;
            matrix[e.u * n + e.v] = matrix[e.v * n + e.u] = 1;
            nbrs[e.u].push_back(e.v);
            nbrs[e.v].push_back(e.u);
        }
        for (auto& v : nbrs) std::sort(v.begin(), v.end());
    }
    bool adjacent(std::uint32_t a, std::uint32_t b) const { return matrix[a * n + b] != 0; }
};

// Chordless cycles whose smallest vertex is `start`. The path is extended only
// by vertices larger than `start` that are adjacent to the path tail and to no
// other interior path vertex; touching `start` closes the cycle.
void cycles_from(const AdjacencyIndex& adj, std::uint32_t start, int max_len, std::vector<VertexCycle>& out) {
    std::vector<std::uint32_t> path{start};
    std::vector<char> on_path(adj.n, 0);
    on_path[start] = 1;

    auto extend = [&](auto&& self) -> void {
        const std::uint32_t tail = path.back();
        for (std::uint32_t w : adj.nbrs[tail]) {
            if (w <= start || on_path[w]) continue;
            bool chord = false;
            for (std::size_t k = 1; k + 1 < path.size(); ++k)
                if (adj.adjacent(w, path[k])) {
                    chord = true;
                    break;
                }
            if (chord) continue;
            if (path.size() >= 2 && adj.adjacent(w, start)) {
                // closes a cycle of length path.size()+1; keep one orientation
                if (path[1] < w && static_cast<int>(path.size()) + 1 <= max_len) {
                    path.push_back(w);
                    out.push_back(path);
                    path.pop_back();
                }
                continue;
            }
            if (path.size() == 1 || static_cast<int>(path.size()) + 1 < max_len) {
                path.push_back(w);
                on_path[w] = 1;
                self(self);
                on_path[w] = 0;
                path.pop_back();
            }
        }
    };
    extend(extend);
}

std::vector<VertexCycle> finish(std::vector<std::vector<VertexCycle>>& per_start) {
    std::vector<VertexCycle> out;
    for (auto& v : per_start)
        for (auto& c : v) out.push_back(std::move(c));
    std::sort(out.begin(), out.end());
    return out;
}

void check_ring_size(int max_ring_size) {
    if (max_ring_size < 3 || max_ring_size > 12) throw std::invalid_argument("max_ring_size must be in [3, 12]");
}

}  // namespace

std::vector<VertexCycle> lift_rings(const GeometricGraph& graph, int max_ring_size) {
    check_ring_size(max_ring_size);
    const AdjacencyIndex adj(graph);
    std::vector<std::vector<VertexCycle>> per_start(adj.n);
    const auto n = static_cast<std::int64_t>(adj.n);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t s = 0; s < n; ++s)
        cycles_from(adj, static_cast<std::uint32_t>(s), max_ring_size, per_start[static_cast<std::size_t>(s)]);
    return finish(per_start);
}

std::vector<VertexCycle> serial::lift_rings(const GeometricGraph& graph, int max_ring_size) {
    check_ring_size(max_ring_size);
    const AdjacencyIndex adj(graph);
    std::vector<std::vector<VertexCycle>> per_start(adj.n);
    for (std::uint32_t s = 0; s < adj.n; ++s) cycles_from(adj, s, max_ring_size, per_start[s]);
    return finish(per_start);
}

SimplexLists lift_cliques(const GeometricGraph& graph, int max_dim) {
    if (max_dim < 0 || max_dim > 3) throw std::invalid_argument("lift_cliques: max_dim must be in [0, 3]");
    const AdjacencyIndex adj(graph);
    SimplexLists out(static_cast<std::size_t>(max_dim) + 1);
    std::vector<std::uint32_t> clique;
    auto grow = [&](auto&& self, std::uint32_t from) -> void {
        out[clique.size() - 1].push_back(clique);
        if (static_cast<int>(clique.size()) > max_dim) return;
        for (std::uint32_t w = from; w < adj.n; ++w) {
            bool ok = true;
            for (auto v : clique) ok = ok && adj.adjacent(v, w);
            if (!ok) continue;
            clique.push_back(w);
            self(self, w + 1);
            clique.pop_back();
        }
    };
    for (std::uint32_t v = 0; v < adj.n; ++v) {
        clique = {v};
        grow(grow, v + 1);
    }
    for (auto& level : out) std::sort(level.begin(), level.end());
    return out;
}

RipsComplex vietoris_rips(const std::vector<geom::Point>& positions, double radius, int max_dim) {
    if (!(radius > 0.0)) throw std::invalid_argument("vietoris_rips: radius must be > 0");
    RipsComplex rc;
    rc.graph.positions = positions;
    rc.graph.node_features.assign(positions.size(), {});
    for (std::uint32_t i = 0; i < positions.size(); ++i)
        for (std::uint32_t j = i + 1; j < positions.size(); ++j)
            if (geom::distance(positions[i], positions[j]) <= radius) rc.graph.edges.push_back({i, j});
    rc.simplices = lift_cliques(rc.graph, max_dim);
    return rc;
}

std::vector<VertexCycle> template_lift(GeometricGraph& graph, const std::vector<VertexCycle>& templates) {
    for (const auto& t : templates) {
        if (t.size() < 3) throw std::invalid_argument("template needs at least 3 vertices");
        std::set<std::uint32_t> uniq(t.begin(), t.end());
        if (uniq.size() != t.size()) throw std::invalid_argument("template repeats a vertex");
        for (auto v : t)
            if (v >= graph.num_nodes()) {
                std::ostringstream oss;
                oss << "template references node " << v << " but the graph has " << graph.num_nodes();
                throw std::invalid_argument(oss.str());
            }
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> present;
    for (const Edge& e : graph.edges) present.insert(std::minmax(e.u, e.v));
    std::vector<VertexCycle> out;
    for (const auto& t : templates) {
        for (std::size_t k = 0; k < t.size(); ++k) {
            const auto key = std::minmax(t[k], t[(k + 1) % t.size()]);
            if (present.insert(key).second) graph.edges.push_back({key.first, key.second});
        }
        out.push_back(canonical_cycle(t));
    }
    return out;
}

std::vector<VertexCycle> lift(GeometricGraph& graph, const LiftConfig& config) {
    config.validate();
    switch (config.method) {
        case LiftMethod::ChordlessCycles: return lift_rings(graph, config.max_ring_size);
        case LiftMethod::Cliques: {
            auto s = lift_cliques(graph, 2);
            return s[2];
        }
        case LiftMethod::VietorisRips: {
            auto rc = vietoris_rips(graph.positions, config.vr_radius, 2);
            graph.edges = rc.graph.edges;
            return rc.simplices[2];
        }
        case LiftMethod::Template: return template_lift(graph, config.templates);
    }
    return {};
}

DecoupledInput decouple(const GeometricGraph& graph, const LiftConfig& config) {
    if (graph.num_nodes() < 2) throw std::invalid_argument("decouple: graph needs at least 2 nodes");
    DecoupledInput out;
    out.dense_graph = graph;
    out.dense_graph.edges = complete_edges(graph.num_nodes());
    out.dense_graph.two_cells.reset();
    out.lifted_graph = graph;
    auto cells = lift(out.lifted_graph, config);
    out.lifted_graph.two_cells = cells;
    out.lifted = build_complex(out.lifted_graph, cells);
    return out;
}

}  // namespace empcn
