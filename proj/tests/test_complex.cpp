#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"

#include "adjacency_oracle.hpp"
#include "empcn/complex.hpp"
#include "empcn/lifting.hpp"
#include "test_util.hpp"

using namespace empcn;
using empcn::testing::make_graph;

namespace {

CellId node(std::uint32_t i) { return {0, i}; }
CellId edge(const CWComplex& c, std::uint32_t a, std::uint32_t b) {
    const auto e = c.edge_index(a, b);
    REQUIRE(e >= 0);
    return {1, static_cast<std::uint32_t>(e)};
}

std::vector<CellId> vec(std::span<const CellId> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("build_complex cell counts") {
    const auto tri = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
    const auto c = build_complex(tri, std::vector<VertexCycle>{{0, 1, 2}});
    CHECK(c.num_cells(0) == 3);
    CHECK(c.num_cells(1) == 3);
    CHECK(c.num_cells(2) == 1);
    CHECK(c.max_rank() == 2);

    const auto path = make_graph(3, {{0, 1}, {1, 2}});
    const auto p = build_complex(path, {});
    CHECK(p.num_cells(1) == 2);
    CHECK(p.num_cells(2) == 0);
}

TEST_CASE("build_complex names a missing edge") {
    const auto g = make_graph(4, {{0, 1}, {1, 2}, {3, 0}});
    try {
        build_complex(g, std::vector<VertexCycle>{{0, 1, 2, 3}});
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("(2,3)") != std::string::npos);
    }
}

TEST_CASE("duplicate 2-cells are merged") {
    const auto sq = testing::cycle_graph(4);
    const auto c = build_complex(sq, std::vector<VertexCycle>{{0, 1, 2, 3}, {2, 1, 0, 3}, {3, 0, 1, 2}});
    CHECK(c.num_cells(2) == 1);
    CHECK(c.cell({2, 0}).vertices == VertexCycle{0, 1, 2, 3});
}

TEST_CASE("canonical_cycle rotates and orients") {
    CHECK(canonical_cycle(std::vector<std::uint32_t>{3, 2, 1, 0}) == VertexCycle{0, 1, 2, 3});
    CHECK(canonical_cycle(std::vector<std::uint32_t>{5, 0, 4, 2}) == VertexCycle{0, 4, 2, 5});
    CHECK(canonical_cycle(std::vector<std::uint32_t>{2, 7, 1}) == VertexCycle{1, 2, 7});
}

TEST_CASE("boundaries and co-boundaries") {
    const auto tri = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
    const auto c = build_complex(tri, std::vector<VertexCycle>{{0, 1, 2}});
    CHECK(vec(c.boundaries(edge(c, 0, 1))) == std::vector<CellId>{node(0), node(1)});
    CHECK(c.boundaries(node(0)).empty());
    CHECK(vec(c.coboundaries(node(0))) == std::vector<CellId>{edge(c, 0, 1), edge(c, 0, 2)});
    CHECK(vec(c.coboundaries(edge(c, 1, 2))) == std::vector<CellId>{{2, 0}});
    CHECK(c.coboundaries({2, 0}).empty());

    const auto hex = testing::cycle_graph(6);
    const auto h = build_complex(hex, std::vector<VertexCycle>{{0, 1, 2, 3, 4, 5}});
    auto b = vec(h.boundaries({2, 0}));
    std::sort(b.begin(), b.end());
    std::vector<CellId> expected;
    for (std::uint32_t i = 0; i < 6; ++i) expected.push_back(edge(h, i, (i + 1) % 6));
    std::sort(expected.begin(), expected.end());
    CHECK(b == expected);
}

TEST_CASE("unknown cells are rejected") {
    const auto c = build_complex(testing::cycle_graph(3), {});
    CHECK_THROWS_AS(c.boundaries({0, 3}), std::out_of_range);
    CHECK_THROWS_AS(c.upper_adjacent({2, 0}), std::out_of_range);
    CHECK_THROWS_AS(c.point_adjacency({1, 7}), std::out_of_range);
}

TEST_CASE("lower adjacency examples") {
    const auto tri = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
    const auto c = build_complex(tri, {});
    const auto lo = testing::sorted(c.lower_adjacent(edge(c, 0, 1)));
    std::vector<Adjacent> expected{{edge(c, 0, 2), node(0)}, {edge(c, 1, 2), node(1)}};
    std::sort(expected.begin(), expected.end());
    CHECK(lo == expected);

    const auto single = build_complex(make_graph(2, {{0, 1}}), {});
    CHECK(single.lower_adjacent({1, 0}).empty());

    // two triangles sharing edge (1,2)
    const auto bow = make_graph(4, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
    const auto b = build_complex(bow, std::vector<VertexCycle>{{0, 1, 2}, {1, 2, 3}});
    REQUIRE(b.num_cells(2) == 2);
    const auto l = b.lower_adjacent({2, 0});
    CHECK(l.size() == 1);
    CHECK(l[0].cell == CellId{2, 1});
    CHECK(l[0].via == edge(b, 1, 2));
}

TEST_CASE("upper adjacency examples") {
    const auto c = build_complex(make_graph(3, {{0, 1}, {1, 2}}), {});
    const auto up = c.upper_adjacent(node(0));
    REQUIRE(up.size() == 1);
    CHECK(up[0].cell == node(1));
    CHECK(up[0].via == edge(c, 0, 1));

    const auto sq = build_complex(testing::cycle_graph(4), std::vector<VertexCycle>{{0, 1, 2, 3}});
    for (std::uint32_t e = 0; e < 4; ++e) {
        const auto u = sq.upper_adjacent({1, e});
        CHECK(u.size() == 3);
        for (const auto& a : u) CHECK(a.via == CellId{2, 0});
    }

    const auto iso = build_complex(make_graph(3, {{0, 1}}), {});
    CHECK(iso.upper_adjacent(node(2)).empty());
}

TEST_CASE("point adjacency examples") {
    const auto hex = build_complex(testing::cycle_graph(6), std::vector<VertexCycle>{{0, 1, 2, 3, 4, 5}});
    CHECK(hex.point_adjacency({2, 0}).size() == 6);
    CHECK(hex.point_adjacency(node(0)).empty());

    const auto g = make_graph(8, {{2, 7}});
    const auto c = build_complex(g, {});
    CHECK(vec(c.point_adjacency({1, 0})) == std::vector<CellId>{node(2), node(7)});
}

TEST_CASE("incoming: point adjacency in both directions and rank checks") {
    const auto sq = build_complex(testing::cycle_graph(4), std::vector<VertexCycle>{{0, 1, 2, 3}});
    const auto to_node = incoming(sq, Adjacency::Point, node(2), 2);
    REQUIRE(to_node.size() == 1);
    CHECK(to_node[0].sender == CellId{2, 0});
    CHECK_FALSE(to_node[0].has_witness);
    CHECK(incoming(sq, Adjacency::Point, {2, 0}, 0).size() == 4);

    const auto up = incoming(sq, Adjacency::Upper, {1, 0}, 1);
    CHECK(up.size() == 3);
    for (const auto& in : up) CHECK(in.has_witness);

    CHECK_THROWS_AS(incoming(sq, Adjacency::Boundary, node(0), 1), std::invalid_argument);
    CHECK_THROWS_AS(incoming(sq, Adjacency::Upper, node(0), 1), std::invalid_argument);
    CHECK_THROWS_AS(check_adjacency_ranks(Adjacency::Coboundary, 0, 1), std::invalid_argument);
    CHECK_NOTHROW(check_adjacency_ranks(Adjacency::Coboundary, 1, 0));
    CHECK_NOTHROW(check_adjacency_ranks(Adjacency::Point, 2, 0));
}

TEST_CASE("adjacency string round trip") {
    for (auto a : {Adjacency::Boundary, Adjacency::Coboundary, Adjacency::Lower, Adjacency::Upper, Adjacency::Point})
        CHECK(adjacency_from_string(to_string(a)) == a);
    CHECK_THROWS_AS(adjacency_from_string("sideways"), std::invalid_argument);
}

TEST_CASE("structural properties on random complexes") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 4 + trial % 6;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
        std::bernoulli_distribution keep(0.45);
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = i + 1; j < n; ++j)
                if (keep(rng)) e.emplace_back(i, j);
        const auto g = make_graph(n, e);
        const auto c = build_complex(g, lift_rings(g, 6));
        for (auto s : testing::all_cells(c)) {
            for (auto t : c.boundaries(s)) {
                const auto cb = c.coboundaries(t);
                CHECK(std::find(cb.begin(), cb.end(), s) != cb.end());
            }
            for (const auto& a : c.upper_adjacent(s)) {
                const auto back = c.upper_adjacent(a.cell);
                CHECK(std::find(back.begin(), back.end(), Adjacent{s, a.via}) != back.end());
                const auto bd = c.boundaries(a.via);
                CHECK(std::find(bd.begin(), bd.end(), s) != bd.end());
                CHECK(std::find(bd.begin(), bd.end(), a.cell) != bd.end());
            }
            for (const auto& a : c.lower_adjacent(s)) {
                const auto back = c.lower_adjacent(a.cell);
                CHECK(std::find(back.begin(), back.end(), Adjacent{s, a.via}) != back.end());
            }
            if (s.rank >= 1) {
                std::set<CellId> from_boundary;
                for (auto t : c.boundaries(s)) {
                    if (t.rank == 0) from_boundary.insert(t);
                    for (auto p : c.point_adjacency(t)) from_boundary.insert(p);
                }
                const auto pts = c.point_adjacency(s);
                CHECK(std::set<CellId>(pts.begin(), pts.end()) == from_boundary);
            }
        }
    }
}

TEST_CASE("adjacency matches the naive oracle on small graphs") {
    std::size_t mismatches = 0;
    std::string first;
    const auto graphs = testing::for_each_connected_graph(5, [&](std::size_t n, const std::vector<Edge>& edges) {
        GeometricGraph g;
        for (std::size_t i = 0; i < n; ++i) g.positions.push_back(geom::Point{double(i), 0.0});
        g.edges = edges;
        const auto c = build_complex(g, lift_rings(g, 6));
        const auto msg = testing::compare_with_oracle(c);
        if (!msg.empty() && mismatches++ == 0) first = msg;
    });
    CHECK(graphs == 1 + 1 + 4 + 38 + 728);
    CHECK_MESSAGE(mismatches == 0, first);
}
