#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "empcn/invariants.hpp"
#include "hull_oracle.hpp"
#include "test_util.hpp"

using namespace empcn;
using namespace empcn::inv;
using geom::Point;

namespace {

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); }

}  // namespace

TEST_CASE("simplex_volume examples") {
    const std::vector<Point> tri{{0, 0}, {1, 0}, {0, 1}};
    CHECK(simplex_volume(tri, 2) == doctest::Approx(0.5));
    const std::vector<Point> tet{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    CHECK(simplex_volume(tet, 3) == doctest::Approx(1.0 / 6.0));
    const std::vector<Point> tri3{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CHECK(simplex_volume(tri3, 2) == doctest::Approx(0.5));
    const std::vector<Point> flat{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
    CHECK(simplex_volume(flat, 2) == doctest::Approx(0.0));
    CHECK_THROWS_AS(simplex_volume(std::vector<Point>{{0, 0}, {1, 0}}, 2), std::invalid_argument);
    CHECK_THROWS_AS(simplex_volume(tri, 3), std::invalid_argument);
}

TEST_CASE("determinant and Gram forms agree") {
    for (std::uint64_t s = 0; s < 50; ++s)
        for (int k : {1, 2, 3}) {
            const auto pts = testing::gaussian_cloud(static_cast<std::size_t>(k) + 1, static_cast<std::size_t>(k), s);
            const double det = simplex_volume_det(pts, k);
            const double gram = simplex_volume(pts, k);
            CHECK(std::abs(det - gram) <= 1e-10);
        }
}

TEST_CASE("hull examples") {
    const auto cube = hull_volume_area(testing::unit_cube());
    CHECK(std::abs(cube.volume - 1.0) <= 1e-12);
    CHECK(std::abs(cube.area - 6.0) <= 1e-12);

    const std::vector<Point> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const auto s = hull_volume_area(sq);
    CHECK(std::abs(s.volume - 1.0) <= 1e-12);
    CHECK(std::abs(s.area - 4.0) <= 1e-12);

    CHECK_THROWS_AS(hull_volume_area(std::vector<Point>{{0, 0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(hull_volume_area(std::vector<Point>{{0, 0, 0, 0}, {1, 0, 0, 0}}), std::invalid_argument);
}

TEST_CASE("degenerate hulls return zero volume") {
    const std::vector<Point> line{{0, 0, 0}, {1, 1, 1}, {3, 3, 3}};
    const auto l = hull_volume_area(line);
    CHECK(l.volume == 0.0);
    CHECK(hull_decompose(line).kind == HullDecomposition::Kind::Degenerate);

    const std::vector<Point> plane{{0, 0, 0}, {2, 0, 0}, {2, 3, 0}, {0, 3, 0}, {1, 1, 0}};
    const auto p = hull_volume_area(plane);
    CHECK(p.volume == 0.0);
    CHECK(p.area == doctest::Approx(6.0));
    CHECK(hull_decompose(plane).kind == HullDecomposition::Kind::Flat);

    const std::vector<Point> seg{{0, 0}, {3, 4}, {1.5, 2}};
    const auto g = hull_volume_area(seg);
    CHECK(g.volume == 0.0);
    CHECK(g.area == doctest::Approx(5.0));

    const std::vector<Point> same{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    CHECK(hull_volume_area(same).volume == 0.0);
    CHECK(hull_volume_area(same).area == 0.0);
}

TEST_CASE("hull of a simplex equals the simplex volume") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto tet = testing::gaussian_cloud(4, 3, s);
        CHECK(std::abs(hull_volume_area(tet).volume - simplex_volume(tet, 3)) <= 1e-10);
        const auto tri = testing::gaussian_cloud(3, 2, s);
        CHECK(std::abs(hull_volume_area(tri).volume - simplex_volume(tri, 2)) <= 1e-10);
    }
}

TEST_CASE("triangle fan of a convex polygon matches the 2D hull") {
    for (int n = 3; n <= 12; ++n) {
        std::vector<Point> poly;
        for (int i = 0; i < n; ++i) {
            const double a = 2 * std::numbers::pi * i / n + 0.1 * std::sin(i);
            poly.push_back(Point{2.0 * std::cos(a), 1.3 * std::sin(a)});
        }
        double fan = 0.0;
        for (int i = 1; i + 1 < n; ++i)
            fan += simplex_volume(std::vector<Point>{poly[0], poly[static_cast<std::size_t>(i)],
                                                     poly[static_cast<std::size_t>(i) + 1]},
                                  2);
        CHECK(std::abs(hull_volume_area(poly).volume - fan) <= 1e-10);
    }
}

TEST_CASE("hull volume agrees with a Monte-Carlo oracle") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto pts = testing::gaussian_cloud(10, 3, 100 + s);
        const double mc = testing::monte_carlo_hull_volume(pts, 200000, s);
        CHECK(std::abs(hull_volume_area(pts).volume - mc) <= 0.03 * mc);
    }
}

TEST_CASE("interior points do not change the hull") {
    auto cube = testing::unit_cube();
    cube.push_back(Point{0.5, 0.5, 0.5});
    cube.push_back(Point{0.2, 0.7, 0.1});
    cube.push_back(Point{0.5, 0.5, 1.0});  // on a face
    const auto h = hull_volume_area(cube);
    CHECK(std::abs(h.volume - 1.0) <= 1e-12);
    CHECK(std::abs(h.area - 6.0) <= 1e-12);
}

TEST_CASE("invariants are E(n) invariant") {
    const auto cloud = testing::gaussian_cloud(10, 3, 7);
    const auto square = std::vector<Point>{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.3, 0.4}};
    const auto base = hull_volume_area(cloud);
    const auto base2 = hull_volume_area(square);
    const double r = approx_radius(cloud);
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto t = geom::random_transform(s, 3, true, 100.0);
        const auto moved = testing::transformed(cloud, t);
        const auto h = hull_volume_area(moved);
        CHECK(close(h.volume, base.volume, 1e-9));
        CHECK(close(h.area, base.area, 1e-9));
        CHECK(close(approx_radius(moved), r, 1e-9));

        const auto t2 = geom::random_transform(s, 2, true, 100.0);
        const auto h2 = hull_volume_area(testing::transformed(square, t2));
        CHECK(close(h2.volume, base2.volume, 1e-9));
        CHECK(close(h2.area, base2.area, 1e-9));
    }
}

TEST_CASE("hull, radius and midpoint are permutation invariant") {
    auto cloud = testing::gaussian_cloud(12, 3, 8);
    const auto h = hull_volume_area(cloud);
    const double r = approx_radius(cloud);
    const auto m = midpoint(cloud);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(cloud.begin(), cloud.end(), rng);
        const auto hp = hull_volume_area(cloud);
        CHECK(std::abs(hp.volume - h.volume) <= 1e-12);
        CHECK(std::abs(hp.area - h.area) <= 1e-12);
        CHECK(approx_radius(cloud) == r);
        const auto mp = midpoint(cloud);
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(mp[k] - m[k]) <= 1e-15);
    }
}

TEST_CASE("radius, midpoint and perimeter examples") {
    const std::vector<Point> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(approx_radius(sq) == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(approx_radius(std::vector<Point>{{0, 0}, {0, 3}}) == doctest::Approx(1.5));
    std::vector<Point> hex;
    for (int i = 0; i < 6; ++i) hex.push_back(Point{std::cos(i * std::numbers::pi / 3), std::sin(i * std::numbers::pi / 3)});
    CHECK(approx_radius(hex) == doctest::Approx(1.0));
    CHECK_THROWS_AS(approx_radius(std::vector<Point>{{0, 0}}), std::invalid_argument);

    const auto m = midpoint(sq);
    CHECK(m == Point{0.5, 0.5});
    CHECK(midpoint(std::vector<Point>{{3, 4}}) == Point{3, 4});
    CHECK(midpoint(std::vector<Point>{{0, 0}, {2, 0}}) == Point{1, 0});
    CHECK_THROWS_AS(midpoint(std::vector<Point>{}), std::invalid_argument);

    auto g = testing::cycle_graph(4, 2);
    g.positions = sq;
    const auto c = build_complex(g, std::vector<VertexCycle>{{0, 1, 2, 3}});
    CHECK(ring_perimeter(c, {2, 0}, g.positions) == doctest::Approx(4.0));
    CHECK_THROWS_AS(ring_perimeter(c, {1, 0}, g.positions), std::invalid_argument);

    auto t = testing::cycle_graph(3, 2);
    t.positions = {Point{0, 0}, Point{2, 0}, Point{1, std::sqrt(3.0)}};
    CHECK(ring_perimeter(build_complex(t, std::vector<VertexCycle>{{0, 1, 2}}), {2, 0}, t.positions) ==
          doctest::Approx(6.0));
    auto h6 = testing::cycle_graph(6, 2);
    h6.positions = hex;
    CHECK(ring_perimeter(build_complex(h6, std::vector<VertexCycle>{{0, 1, 2, 3, 4, 5}}), {2, 0}, h6.positions) ==
          doctest::Approx(6.0));
}

TEST_CASE("compute_invariants examples") {
    auto g = testing::make_graph(2, {{0, 1}}, 3);
    g.positions = {Point{0, 0, 0}, Point{3, 4, 0}};
    const auto c = build_complex(g, {});
    const auto nn = compute_invariants(message_kind_from_string("0->0:upper"), {0, 0}, {0, 1}, c, g.positions,
                                       InvariantConfig{});
    CHECK(nn.values == std::vector<double>{5.0});

    auto right = testing::make_graph(3, {{0, 1}, {0, 2}}, 2);
    right.positions = {Point{0, 0}, Point{1, 0}, Point{0, 1}};
    const auto rc = build_complex(right, {});
    const auto ee = compute_invariants(message_kind_from_string("1->1:lower"), {1, 0}, {1, 1}, rc, right.positions,
                                       InvariantConfig{});
    REQUIRE(ee.values.size() == 3);
    CHECK(ee.values[0] == doctest::Approx(1.0));
    CHECK(ee.values[1] == doctest::Approx(1.0));
    CHECK(ee.values[2] == doctest::Approx(std::sqrt(2.0) / 2));

    auto sq = testing::cycle_graph(4, 2);
    sq.positions = {Point{0, 0}, Point{1, 0}, Point{1, 1}, Point{0, 1}};
    const auto sc = build_complex(sq, std::vector<VertexCycle>{{0, 1, 2, 3}});
    const auto rn = compute_invariants(message_kind_from_string("2->0:point"), {0, 0}, {2, 0}, sc, sq.positions,
                                       InvariantConfig{});
    REQUIRE(rn.values.size() == 4);
    CHECK(rn.values[0] == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(rn.values[1] == doctest::Approx(4.0));
    CHECK(rn.values[2] == doctest::Approx(1.0));
    CHECK(rn.values[3] == doctest::Approx(4.0));

    const auto er = compute_invariants(message_kind_from_string("1->2:boundary"), {2, 0}, {1, 0}, sc, sq.positions,
                                       InvariantConfig{});
    CHECK(er.values == std::vector<double>{std::sqrt(2.0) / 2, 4.0, 1.0});

    CHECK_THROWS_AS(compute_invariants(message_kind_from_string("0->0:upper"), {1, 0}, {0, 1}, sc, sq.positions,
                                       InvariantConfig{}),
                    std::invalid_argument);
}

TEST_CASE("schema follows the configured order") {
    InvariantConfig cfg;
    const auto kind = message_kind_from_string("2->0:point");
    cfg.schemas[kind] = {Invariant::HullArea, Invariant::RingRadius, Invariant::VertexCount};
    auto sq = testing::cycle_graph(4, 2);
    sq.positions = {Point{0, 0}, Point{1, 0}, Point{1, 1}, Point{0, 1}};
    const auto c = build_complex(sq, std::vector<VertexCycle>{{0, 1, 2, 3}});
    const auto v = compute_invariants(kind, {0, 1}, {2, 0}, c, sq.positions, cfg);
    CHECK(v.schema == cfg.schemas[kind]);
    CHECK(v.values[0] == doctest::Approx(4.0));
    CHECK(v.values[1] == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(v.values[2] == 4.0);
}

TEST_CASE("inapplicable invariants are rejected at validation") {
    InvariantConfig cfg;
    cfg.schemas[message_kind_from_string("0->0:upper")] = {Invariant::RingPerimeter};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(invariant_config_from_json({{"0->0:upper", {"hull-volume"}}}), std::invalid_argument);
    CHECK_THROWS_AS(invariant_config_from_json({{"0->0:upper", {"no-such-invariant"}}}), std::invalid_argument);
    CHECK_THROWS_AS(message_kind_from_string("0-0:upper"), std::invalid_argument);

    InvariantConfig ok;
    ok.schemas[message_kind_from_string("1->2:boundary")] = {Invariant::EdgeLength, Invariant::RingRadius};
    const auto back = invariant_config_from_json(to_json(ok));
    CHECK(back.schemas == ok.schemas);
}

TEST_CASE("invariant names round trip") {
    for (auto i : {Invariant::NodeDistance, Invariant::EdgeLength, Invariant::SenderEdgeLength,
                   Invariant::ReceiverEdgeLength, Invariant::MidpointDistance, Invariant::RingRadius,
                   Invariant::RingPerimeter, Invariant::HullVolume, Invariant::HullArea,
                   Invariant::NodeToRingMidpoint, Invariant::VertexCount, Invariant::EdgeAngle})
        CHECK(invariant_from_string(to_string(i)) == i);
    CHECK(to_string(Invariant::NodeToRingMidpoint) == "node-to-ring-midpoint");
}
