#include <chrono>
#include <cmath>
#include <set>

#include "doctest.h"

#include "empcn/datagen.hpp"

using namespace empcn;
using namespace empcn::data;
using geom::Point;

namespace {

std::vector<double> center_of_mass(const std::vector<Point>& x) {
    std::vector<double> c(x.front().dim(), 0.0);
    for (const auto& p : x)
        for (std::size_t k = 0; k < c.size(); ++k) c[k] += p[k] / static_cast<double>(x.size());
    return c;
}

}  // namespace

TEST_CASE("center of mass moves with the mean initial velocity") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const NBodyConfig cfg;
        const auto t = simulate_nbody(cfg, seed);
        const auto c0 = center_of_mass(t.initial.positions);
        const auto c1 = center_of_mass(t.final_positions);
        const auto vbar = center_of_mass(*t.initial.velocities);
        const double time = cfg.steps * cfg.dt;
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(c1[k] - c0[k] - time * vbar[k]) <= 1e-9);
    }
}

TEST_CASE("two opposite charges released at rest keep their center of mass") {
    NBodyConfig cfg;
    cfg.particles = 2;
    cfg.velocity_scale = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t = simulate_nbody(cfg, seed);
        const auto c0 = center_of_mass(t.initial.positions);
        const auto c1 = center_of_mass(t.final_positions);
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(c1[k] - c0[k]) <= 1e-9);
    }
}

TEST_CASE("accelerations are the negative gradient of the softened potential") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t = simulate_nbody(NBodyConfig{}, seed);
        auto x = t.initial.positions;
        const std::vector<Point> zero(x.size(), Point{0, 0, 0});
        const auto a = nbody_accelerations(x, t.charges);
        const double h = 1e-6;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t k = 0; k < 3; ++k) {
                auto xp = x, xm = x;
                xp[i][k] += h;
                xm[i][k] -= h;
                const double grad = (nbody_energy(xp, zero, t.charges) - nbody_energy(xm, zero, t.charges)) / (2 * h);
                CHECK(std::abs(-grad - a[i][k]) <= 1e-6 * (1 + std::abs(a[i][k])));
            }
    }
}

TEST_CASE("energy drift stays below one percent") {
    const NBodyConfig cfg;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto t = simulate_nbody(cfg, seed);
        const double e0 = nbody_energy(t.initial.positions, *t.initial.velocities, t.charges);
        const double e1 = nbody_energy(t.final_positions, t.final_velocities, t.charges);
        CHECK_MESSAGE(std::abs(e1 - e0) <= 0.01 * std::abs(e0), "seed ", seed, " e0 ", e0, " e1 ", e1);
    }
}

TEST_CASE("simulation is deterministic and well formed") {
    const NBodyConfig cfg;
    const auto a = simulate_nbody(cfg, 42);
    const auto b = simulate_nbody(cfg, 42);
    CHECK(a.final_positions == b.final_positions);
    CHECK(a.initial.positions == b.initial.positions);
    CHECK_FALSE(simulate_nbody(cfg, 43).final_positions == a.final_positions);

    CHECK(a.initial.num_nodes() == 5);
    CHECK(a.initial.edges.size() == 10);
    for (double q : a.charges) CHECK((q == 1.0 || q == -1.0));
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& v = (*a.initial.velocities)[i];
        CHECK(a.initial.node_features[i][0] == doctest::Approx(std::hypot(v[0], v[1], v[2])));
        CHECK(a.initial.node_features[i][1] == a.charges[i]);
    }
    const auto* target = std::get_if<std::vector<Point>>(&a.initial.target);
    REQUIRE(target);
    CHECK(*target == a.final_positions);
}

TEST_CASE("simulation preconditions") {
    NBodyConfig c;
    c.particles = 1;
    CHECK_THROWS_AS(simulate_nbody(c, 0), std::invalid_argument);
    c = NBodyConfig{};
    c.dt = 0.0;
    CHECK_THROWS_AS(simulate_nbody(c, 0), std::invalid_argument);
    c = NBodyConfig{};
    c.steps = 0;
    CHECK_THROWS_AS(simulate_nbody(c, 0), std::invalid_argument);
    CHECK_THROWS_AS(nbody_config_from_json({{"particels", 3}}), std::invalid_argument);
    CHECK(nbody_config_from_json(to_json(NBodyConfig{})).steps == 1000);
}

TEST_CASE("dataset splits are disjoint, parallel equals serial, and generation is fast") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto par = make_nbody_dataset(500, 100, 100, 7, NBodyConfig{});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 60.0);
    CHECK(par.train.size() == 500);
    CHECK(par.val.size() == 100);
    CHECK(par.test.size() == 100);

    std::set<std::uint64_t> seeds;
    for (const auto* split : {&par.train, &par.val, &par.test})
        for (const auto& g : *split) seeds.insert(g.meta.at("seed").get<std::uint64_t>());
    CHECK(seeds.size() == 700);

    const auto ser = serial::make_nbody_dataset(500, 100, 100, 7, NBodyConfig{});
    for (std::size_t i = 0; i < 500; ++i) {
        CHECK(ser.train[i].positions == par.train[i].positions);
        CHECK(ser.train[i].target == par.train[i].target);
    }
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(ser.val[i].target == par.val[i].target);
        CHECK(ser.test[i].target == par.test[i].target);
    }
    CHECK_THROWS_AS(make_nbody_dataset(1, 0, 1, 7, NBodyConfig{}), std::invalid_argument);
}

TEST_CASE("sample seeds never collide") {
    std::set<std::uint64_t> s;
    for (std::uint64_t k = 0; k < 100000; ++k) s.insert(sample_seed(3, k));
    CHECK(s.size() == 100000);
}

TEST_CASE("skeleton templates") {
    const auto t = skeleton_templates();
    const std::vector<VertexCycle> expected{{0, 3, 8},       {6, 7, 8},        {1, 2, 3},
                                            {24, 25, 26},    {21, 22, 23},     {7, 8, 2, 3},
                                            {24, 26, 17, 19}, {25, 7, 18, 2}, {6, 7, 8, 1, 2, 3}};
    CHECK(t == expected);
    CHECK(t.size() == 9);
    for (const auto& c : t)
        for (auto v : c) CHECK(v < 31);
}
