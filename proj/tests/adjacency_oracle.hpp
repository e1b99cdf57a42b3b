#pragma once

// Naive set-intersection reference for every adjacency relation of a
// complex. Relations are derived from vertex contents alone, never from the
// complex's caches.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "empcn/complex.hpp"
#include "empcn/lifting.hpp"

namespace empcn::testing {

inline std::set<std::uint32_t> vertex_set(const Cell& c) { return {c.vertices.begin(), c.vertices.end()}; }

inline std::vector<CellId> all_cells(const CWComplex& c) {
    std::vector<CellId> out;
    for (int r = 0; r <= kMaxRank; ++r)
        for (std::uint32_t i = 0; i < c.num_cells(r); ++i) out.push_back({r, i});
    return out;
}

/// tau is on the rim of sigma: rank one lower and every vertex of tau lies on
/// sigma, with edges of a ring required to be consecutive on the cycle.
inline bool naive_is_boundary(const CWComplex& c, CellId tau, CellId sigma) {
    if (tau.rank + 1 != sigma.rank) return false;
    const auto& s = c.cell(sigma).vertices;
    const auto& t = c.cell(tau).vertices;
    if (sigma.rank == 1) return t[0] == s[0] || t[0] == s[1];
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto a = s[i], b = s[(i + 1) % s.size()];
        if (std::min(a, b) == t[0] && std::max(a, b) == t[1]) return true;
    }
    return false;
}

inline std::vector<CellId> naive_boundaries(const CWComplex& c, CellId sigma) {
    std::vector<CellId> out;
    for (auto t : all_cells(c))
        if (naive_is_boundary(c, t, sigma)) out.push_back(t);
    return out;
}

inline std::vector<CellId> naive_coboundaries(const CWComplex& c, CellId tau) {
    std::vector<CellId> out;
    for (auto s : all_cells(c))
        if (naive_is_boundary(c, tau, s)) out.push_back(s);
    return out;
}

inline std::vector<Adjacent> naive_lower(const CWComplex& c, CellId sigma) {
    std::vector<Adjacent> out;
    const auto bs = naive_boundaries(c, sigma);
    for (auto t : all_cells(c)) {
        if (t.rank != sigma.rank || t == sigma) continue;
        for (auto d : naive_boundaries(c, t))
            if (std::find(bs.begin(), bs.end(), d) != bs.end()) out.push_back({t, d});
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<Adjacent> naive_upper(const CWComplex& c, CellId sigma) {
    std::vector<Adjacent> out;
    const auto cs = naive_coboundaries(c, sigma);
    for (auto t : all_cells(c)) {
        if (t.rank != sigma.rank || t == sigma) continue;
        for (auto d : naive_coboundaries(c, t))
            if (std::find(cs.begin(), cs.end(), d) != cs.end()) out.push_back({t, d});
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<CellId> naive_point(const CWComplex& c, CellId sigma) {
    std::vector<CellId> out;
    if (sigma.rank == 0) return out;
    for (auto v : vertex_set(c.cell(sigma))) out.push_back({0, v});
    return out;
}

template <class T>
std::vector<T> sorted(std::span<const T> s) {
    std::vector<T> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}

/// Empty string when every relation of every cell matches the oracle,
/// otherwise a description of the first mismatch. Boundary lists are derived
/// once per complex so the pairwise relations stay cheap on large sweeps.
inline std::string compare_with_oracle(const CWComplex& c) {
    const auto cells = all_cells(c);
    std::map<CellId, std::vector<CellId>> bd, cobd;
    for (auto s : cells) bd[s], cobd[s];
    for (auto t : cells)
        for (auto s : cells)
            if (naive_is_boundary(c, t, s)) {
                bd[s].push_back(t);
                cobd[t].push_back(s);
            }
    auto shared = [&](const std::map<CellId, std::vector<CellId>>& rel, CellId s) {
        std::vector<Adjacent> out;
        const auto& mine = rel.at(s);
        for (auto t : cells) {
            if (t.rank != s.rank || t == s) continue;
            for (auto d : rel.at(t))
                if (std::find(mine.begin(), mine.end(), d) != mine.end()) out.push_back({t, d});
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    for (auto s : cells) {
        if (sorted(c.boundaries(s)) != bd[s]) return "boundary of " + to_string(s);
        if (sorted(c.coboundaries(s)) != cobd[s]) return "co-boundary of " + to_string(s);
        if (sorted(c.lower_adjacent(s)) != shared(bd, s)) return "lower adjacency of " + to_string(s);
        if (sorted(c.upper_adjacent(s)) != shared(cobd, s)) return "upper adjacency of " + to_string(s);
        if (sorted(c.point_adjacency(s)) != naive_point(c, s)) return "point adjacency of " + to_string(s);
    }
    return {};
}

inline bool connected(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<std::uint32_t> parent(n);
    for (std::uint32_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t comps = n;
    for (auto e : edges) {
        auto a = find(e.u), b = find(e.v);
        if (a != b) {
            parent[a] = b;
            --comps;
        }
    }
    return comps == 1;
}

/// Calls f(n, edges) for every connected labeled graph on 1..max_nodes nodes.
template <class F>
std::size_t for_each_connected_graph(std::size_t max_nodes, F&& f) {
    std::size_t count = 0;
    for (std::size_t n = 1; n <= max_nodes; ++n) {
        std::vector<Edge> all;
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = i + 1; j < n; ++j) all.push_back({i, j});
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << all.size()); ++mask) {
            std::vector<Edge> edges;
            for (std::size_t k = 0; k < all.size(); ++k)
                if (mask >> k & 1) edges.push_back(all[k]);
            if (!connected(n, edges)) continue;
            f(n, edges);
            ++count;
        }
    }
    return count;
}

}  // namespace empcn::testing
