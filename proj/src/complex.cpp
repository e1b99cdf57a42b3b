#include "empcn/complex.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace empcn {

std::string to_string(CellId id) {
    static const char* names[] = {"node", "edge", "ring"};
    std::ostringstream oss;
    oss << (id.rank >= 0 && id.rank <= kMaxRank ? names[id.rank] : "cell") << " " << id.index;
    return oss.str();
}

std::string to_string(Adjacency a) {
    switch (a) {
        case Adjacency::Boundary: return "boundary";
        case Adjacency::Coboundary: return "co-boundary";
        case Adjacency::Lower: return "lower";
        case Adjacency::Upper: return "upper";
        case Adjacency::Point: return "point";
    }
    return "?";
}

Adjacency adjacency_from_string(const std::string& s) {
    for (auto a : {Adjacency::Boundary, Adjacency::Coboundary, Adjacency::Lower, Adjacency::Upper, Adjacency::Point})
        if (to_string(a) == s) return a;
    throw std::invalid_argument("unknown adjacency \"" + s + "\"");
}

VertexCycle canonical_cycle(std::span<const std::uint32_t> cycle) {
    const std::size_t n = cycle.size();
    if (n == 0) return {};
    const std::size_t start =
        static_cast<std::size_t>(std::min_element(cycle.begin(), cycle.end()) - cycle.begin());
    const bool forward = n < 3 || cycle[(start + 1) % n] <= cycle[(start + n - 1) % n];
    VertexCycle out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = forward ? cycle[(start + k) % n] : cycle[(start + n - k) % n];
    return out;
}

const Cell& CWComplex::cell(CellId id) const {
    check(id);
    return cells_[static_cast<std::size_t>(id.rank)][id.index];
}

bool CWComplex::contains(CellId id) const {
    return id.rank >= 0 && id.rank <= kMaxRank && id.index < num_cells(id.rank);
}

void CWComplex::check(CellId id) const {
    if (!contains(id)) throw std::out_of_range("unknown cell: " + to_string(id));
}

std::size_t CWComplex::flat(CellId id) const {
    check(id);
    return offsets_[static_cast<std::size_t>(id.rank)] + id.index;
}

std::int64_t CWComplex::edge_index(std::uint32_t a, std::uint32_t b) const {
    if (a >= incident_.size()) return -1;
    const auto& inc = incident_[a];
    auto it = std::lower_bound(inc.begin(), inc.end(), std::pair<std::uint32_t, std::uint32_t>{b, 0});
    if (it == inc.end() || it->first != b) return -1;
    return it->second;
}

std::span<const CellId> CWComplex::boundaries(CellId id) const { return cell(id).boundary; }
std::span<const CellId> CWComplex::coboundaries(CellId id) const { return coboundary_[flat(id)]; }
std::span<const Adjacent> CWComplex::lower_adjacent(CellId id) const { return lower_[flat(id)]; }
std::span<const Adjacent> CWComplex::upper_adjacent(CellId id) const { return upper_[flat(id)]; }
std::span<const CellId> CWComplex::point_adjacency(CellId id) const { return point_[flat(id)]; }

int CWComplex::max_rank() const {
    for (int r = kMaxRank; r > 0; --r)
        if (num_cells(r) > 0) return r;
    return 0;
}

CWComplex build_complex(std::size_t num_nodes, std::span<const Edge> edges, std::span<const VertexCycle> two_cells) {
    CWComplex c;

    auto& nodes = c.cells_[0];
    nodes.reserve(num_nodes);
    for (std::uint32_t i = 0; i < num_nodes; ++i) nodes.push_back({{0, i}, {i}, {}});

    std::vector<std::pair<std::uint32_t, std::uint32_t>> sorted;
    sorted.reserve(edges.size());
    for (const Edge& e : edges) {
        if (e.u >= num_nodes || e.v >= num_nodes || e.u == e.v) {
            std::ostringstream oss;
            oss << "invalid edge (" << e.u << "," << e.v << ")";
            throw std::invalid_argument(oss.str());
        }
        sorted.push_back(std::minmax(e.u, e.v));
    }
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("duplicate edge in graph");

    c.incident_.assign(num_nodes, {});
    auto& edge_cells = c.cells_[1];
    edge_cells.reserve(sorted.size());
    for (std::uint32_t k = 0; k < sorted.size(); ++k) {
        const auto [u, v] = sorted[k];
        edge_cells.push_back({{1, k}, {u, v}, {{0, u}, {0, v}}});
        c.incident_[u].push_back({v, k});
        c.incident_[v].push_back({u, k});
    }
    for (auto& inc : c.incident_) std::sort(inc.begin(), inc.end());

    // 2-cells: canonicalize, resolve boundary edges, dedupe by edge set.
    std::map<std::vector<std::uint32_t>, VertexCycle> by_edge_set;
    for (const auto& raw : two_cells) {
        if (raw.size() < 3) throw std::invalid_argument("2-cell needs at least 3 vertices");
        std::vector<std::uint32_t> check(raw.begin(), raw.end());
        std::sort(check.begin(), check.end());
        if (std::adjacent_find(check.begin(), check.end()) != check.end())
            throw std::invalid_argument("2-cell repeats a vertex");
        if (check.back() >= num_nodes) throw std::invalid_argument("2-cell references a missing node");

        VertexCycle cyc = canonical_cycle(raw);
        std::vector<std::uint32_t> edge_set;
        for (std::size_t k = 0; k < cyc.size(); ++k) {
            const auto [a, b] = std::minmax(cyc[k], cyc[(k + 1) % cyc.size()]);
            const auto e = c.edge_index(a, b);
            if (e < 0) {
                std::ostringstream oss;
                oss << "2-cell uses missing edge (" << a << "," << b << ")";
                throw std::invalid_argument(oss.str());
            }
            edge_set.push_back(static_cast<std::uint32_t>(e));
        }
        std::sort(edge_set.begin(), edge_set.end());
        by_edge_set.emplace(std::move(edge_set), std::move(cyc));
    }
    std::vector<std::pair<VertexCycle, std::vector<std::uint32_t>>> rings;
    for (auto& [es, cyc] : by_edge_set) rings.emplace_back(cyc, es);
    std::sort(rings.begin(), rings.end());
    auto& ring_cells = c.cells_[2];
    for (std::uint32_t k = 0; k < rings.size(); ++k) {
        Cell cell{{2, k}, rings[k].first, {}};
        for (auto e : rings[k].second) cell.boundary.push_back({1, e});
        ring_cells.push_back(std::move(cell));
    }

    for (int r = 0; r <= kMaxRank; ++r)
        c.offsets_[static_cast<std::size_t>(r) + 1] = c.offsets_[static_cast<std::size_t>(r)] + c.num_cells(r);
    const std::size_t total = c.offsets_.back();
    c.coboundary_.assign(total, {});
    c.lower_.assign(total, {});
    c.upper_.assign(total, {});
    c.point_.assign(total, {});

    for (int r = 1; r <= kMaxRank; ++r)
        for (const Cell& cell : c.cells(r))
            for (CellId b : cell.boundary) c.coboundary_[c.flat(b)].push_back(cell.id);
    for (auto& cb : c.coboundary_) std::sort(cb.begin(), cb.end());

    for (int r = 0; r <= kMaxRank; ++r) {
        for (const Cell& cell : c.cells(r)) {
            const std::size_t f = c.flat(cell.id);
            auto& lower = c.lower_[f];
            for (CellId d : cell.boundary)
                for (CellId t : c.coboundary_[c.flat(d)])
                    if (t != cell.id) lower.push_back({t, d});
            std::sort(lower.begin(), lower.end());

            auto& upper = c.upper_[f];
            for (CellId d : c.coboundary_[f])
                for (CellId t : c.cell(d).boundary)
                    if (t != cell.id) upper.push_back({t, d});
            std::sort(upper.begin(), upper.end());

            if (r > 0) {
                std::vector<std::uint32_t> vs = cell.vertices;
                std::sort(vs.begin(), vs.end());
                for (auto v : vs) c.point_[f].push_back({0, v});
            }
        }
    }
    return c;
}

CWComplex build_complex(const GeometricGraph& graph, std::span<const VertexCycle> two_cells) {
    return build_complex(graph.num_nodes(), graph.edges, two_cells);
}

void check_adjacency_ranks(Adjacency adjacency, int sender_rank, int receiver_rank) {
    auto bad = [&] {
        std::ostringstream oss;
        oss << to_string(adjacency) << " adjacency cannot carry rank " << sender_rank << " -> rank " << receiver_rank
            << " messages";
        throw std::invalid_argument(oss.str());
    };
    if (sender_rank < 0 || sender_rank > kMaxRank || receiver_rank < 0 || receiver_rank > kMaxRank) bad();
    switch (adjacency) {
        case Adjacency::Boundary:
            if (sender_rank != receiver_rank - 1) bad();
            break;
        case Adjacency::Coboundary:
            if (sender_rank != receiver_rank + 1) bad();
            break;
        case Adjacency::Lower:
            if (sender_rank != receiver_rank || receiver_rank == 0) bad();
            break;
        case Adjacency::Upper:
            if (sender_rank != receiver_rank || receiver_rank == kMaxRank) bad();
            break;
        case Adjacency::Point:
            if (!((sender_rank == 0) != (receiver_rank == 0))) bad();
            break;
    }
}

std::vector<Incoming> incoming(const CWComplex& c, Adjacency adjacency, CellId receiver, int sender_rank) {
    check_adjacency_ranks(adjacency, sender_rank, receiver.rank);
    std::vector<Incoming> out;
    switch (adjacency) {
        case Adjacency::Boundary:
            for (CellId t : c.boundaries(receiver)) out.push_back({t, t, false});
            break;
        case Adjacency::Coboundary:
            for (CellId t : c.coboundaries(receiver)) out.push_back({t, t, false});
            break;
        case Adjacency::Lower:
            for (const Adjacent& a : c.lower_adjacent(receiver)) out.push_back({a.cell, a.via, true});
            break;
        case Adjacency::Upper:
            for (const Adjacent& a : c.upper_adjacent(receiver)) out.push_back({a.cell, a.via, true});
            break;
        case Adjacency::Point:
            if (receiver.rank > 0) {
                for (CellId t : c.point_adjacency(receiver)) out.push_back({t, t, false});
            } else {
                for (const Cell& cell : c.cells(sender_rank)) {
                    const auto& vs = cell.vertices;
                    if (std::find(vs.begin(), vs.end(), receiver.index) != vs.end())
                        out.push_back({cell.id, cell.id, false});
                }
            }
            break;
    }
    return out;
}

}  // namespace empcn
