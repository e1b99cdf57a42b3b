#include "empcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace empcn {

bool GeometricGraph::has_edge(std::uint32_t a, std::uint32_t b) const {
    return std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
        return (e.u == a && e.v == b) || (e.u == b && e.v == a);
    });
}

void GeometricGraph::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    const std::size_t n = positions.size();
    const std::size_t d = dim();
    for (std::size_t i = 0; i < n; ++i) {
        if (positions[i].dim() != d) fail("positions have inconsistent dimensions");
    }
    if (velocities) {
        if (velocities->size() != n) fail("velocities length does not match positions");
        for (const auto& v : *velocities)
            if (v.dim() != d) fail("velocity dimension does not match positions");
    }
    if (node_features.size() != n) fail("node_features length does not match positions");
    for (const auto& f : node_features) {
        if (f.size() != feature_width()) fail("node_features have inconsistent widths");
        for (double x : f)
            if (!std::isfinite(x)) fail("node feature is not finite");
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const Edge& e : edges) {
        if (e.u >= n || e.v >= n) {
            std::ostringstream oss;
            oss << "edge (" << e.u << "," << e.v << ") references a missing node";
            fail(oss.str());
        }
        if (e.u == e.v) fail("self-loop on node " + std::to_string(e.u));
        auto key = std::minmax(e.u, e.v);
        if (!seen.insert(key).second) {
            std::ostringstream oss;
            oss << "duplicate edge (" << key.first << "," << key.second << ")";
            fail(oss.str());
        }
    }
    if (two_cells) {
        for (const auto& cyc : *two_cells)
            for (auto v : cyc)
                if (v >= n) fail("two_cells entry references a missing node");
    }
    if (const auto* tp = std::get_if<std::vector<geom::Point>>(&target)) {
        if (tp->size() != n) fail("target positions length does not match positions");
        for (const auto& p : *tp)
            if (p.dim() != d) fail("target position dimension does not match positions");
    } else if (const auto* ts = std::get_if<double>(&target)) {
        if (!std::isfinite(*ts)) fail("target is not finite");
    }
}

std::vector<Edge> complete_edges(std::size_t n) {
    std::vector<Edge> out;
    out.reserve(n * (n > 0 ? n - 1 : 0) / 2);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j) out.push_back({i, j});
    return out;
}

}  // namespace empcn
