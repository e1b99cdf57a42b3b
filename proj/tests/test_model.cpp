#include <cmath>

#include "doctest.h"

#include "empcn/checks.hpp"
#include "empcn/invariants.hpp"
#include "empcn/model.hpp"
#include "test_util.hpp"

using namespace empcn;
using namespace empcn::model;
using inv::message_kind_from_string;

namespace {

ModelConfig small(int layers = 2, std::size_t width = 8) {
    ModelConfig c;
    c.num_layers = layers;
    c.hidden_width = width;
    c.init_seed = 3;
    return c;
}

GeometricGraph fused_rings() {
    // square 0-1-2-3 sharing edge (1,2) with triangle 1-2-4, plus a tail 3-5
    auto g = checks::random_graph(4, 6, 3, 2, 0.0);
    g.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {1, 4}, {2, 4}, {3, 5}};
    return g;
}

nn::Matrix run(const Model& m, const Plan& p, std::optional<nn::Matrix>* scalar = nullptr) {
    nn::Tape t(&m.params);
    const auto out = forward(t, m, p);
    if (scalar && out.scalar) *scalar = t.value(*out.scalar);
    return t.value(out.positions);
}

}  // namespace

TEST_CASE("zero layers read out the embedding") {
    auto c = small(0);
    const auto g = fused_rings();
    const auto plan = prepare_sample(g, LiftConfig{}, c);
    const auto m = build_model(c, g.feature_width(), 3);
    CHECK(m.layers.empty());
    CHECK(run(m, plan) == plan.positions);

    c.readout = Readout::Scalar;
    const auto ms = build_model(c, g.feature_width(), 3);
    std::optional<nn::Matrix> s;
    run(ms, plan, &s);
    REQUIRE(s.has_value());
    CHECK(s->rows == 1);
    CHECK(std::isfinite((*s)(0, 0)));
}

TEST_CASE("identical inputs give identical states and outputs") {
    const auto c = small();
    const auto g = fused_rings();
    const auto m1 = build_model(c, 2, 3);
    const auto m2 = build_model(c, 2, 3);
    CHECK(m1.params == m2.params);
    const auto p = prepare_sample(g, LiftConfig{}, c);
    CHECK(run(m1, p) == run(m2, p));
}

TEST_CASE("parameter blocks depend only on seed and key") {
    auto a = small();
    auto b = small();
    b.messages = {message_kind_from_string("0->0:upper"), message_kind_from_string("0->1:boundary"),
                  message_kind_from_string("1->0:co-boundary")};
    const auto ma = build_model(a, 2, 3);
    const auto mb = build_model(b, 2, 3);
    std::size_t shared = 0;
    for (nn::ParamId i = 0; i < mb.params.size(); ++i) {
        const auto& key = mb.params.key(i);
        if (!ma.params.contains(key)) continue;
        const auto& x = ma.params[ma.params.id(key)];
        if (x.same_shape(mb.params[i])) {
            CHECK_MESSAGE(x == mb.params[i], key);
            ++shared;
        }
    }
    CHECK(shared > 10);
}

TEST_CASE("decoupled model on a ring-free graph equals the node-only model") {
    auto g = checks::random_graph(9, 6, 3, 2, 0.0);  // a tree: no rings
    ModelConfig dec = small(3, 8);
    dec.decoupled = true;
    ModelConfig node = small(3, 8);
    node.messages = {message_kind_from_string("0->0:upper")};

    const auto pd = prepare_sample(g, LiftConfig{}, dec);
    auto dense = g;
    dense.edges = complete_edges(g.num_nodes());
    const auto pn = prepare_sample(dense, LiftConfig{}, node);
    const auto md = build_model(dec, 2, 3);
    const auto mn = build_model(node, 2, 3);
    CHECK(md.params.total_count() > mn.params.total_count());
    CHECK(run(md, pd) == run(mn, pn));

    dec.readout = node.readout = Readout::Scalar;
    std::optional<nn::Matrix> sd, sn;
    run(build_model(dec, 2, 3), pd, &sd);
    run(build_model(node, 2, 3), pn, &sn);
    CHECK(*sd == *sn);
}

TEST_CASE("decoupled message count and parameter split") {
    ModelConfig dec = small(2, 16);
    dec.decoupled = true;
    const auto g = fused_rings();
    const auto plan = prepare_sample(g, LiftConfig{}, dec);
    nn::Tape t;
    const auto m = build_model(dec, 2, 3);
    nn::Tape tape(&m.params);
    const auto out = forward(tape, m, plan);
    // 6 nodes complete: 30 directed pairs; rings of size 4 and 3
    REQUIRE(out.messages_per_layer.size() == 2);
    for (auto n : out.messages_per_layer) CHECK(n == 30 + 4 + 3);
    CHECK(plan.message_count() == 37);
    const double share = double(m.ring_branch_count()) / double(m.params.total_count());
    CHECK(std::abs(share - 0.25) <= 0.02);

    dec.decoupled_split = 0.8;
    const auto m8 = build_model(dec, 2, 3);
    CHECK(std::abs(double(m8.ring_branch_count()) / double(m8.params.total_count()) - 0.2) <= 0.02);
}

TEST_CASE("stripping invariants narrows exactly the higher-order message inputs") {
    auto full = small();
    auto stripped = small();
    stripped.strip_higher_order_invariants = true;
    const auto mf = build_model(full, 2, 3);
    const auto ms = build_model(stripped, 2, 3);
    for (const auto& k : full.channels()) {
        const auto diff = mf.message_input_width(k) - ms.message_input_width(k);
        const bool node_only = k.sender_rank == 0 && k.receiver_rank == 0;
        CHECK(diff == (node_only ? 0 : full.schema(k).size()));
        CHECK(stripped.schema(k).size() == (node_only ? 1u : 0u));
    }
}

TEST_CASE("message inputs include the witness for upper adjacency") {
    auto c = small();
    c.messages = {message_kind_from_string("0->0:upper"), message_kind_from_string("1->1:upper"),
                  message_kind_from_string("0->1:boundary"), message_kind_from_string("1->2:boundary")};
    const auto m = build_model(c, 2, 3);
    const auto h = c.hidden_width;
    CHECK(m.message_input_width(message_kind_from_string("0->0:upper")) == 3 * h + 1);
    CHECK(m.message_input_width(message_kind_from_string("1->1:upper")) == 3 * h + 3);
    CHECK(m.message_input_width(message_kind_from_string("0->1:boundary")) == 2 * h + 1);
}

TEST_CASE("zero position dynamics leave positions unchanged") {
    const auto c = small();
    auto m = build_model(c, 2, 3);
    for (nn::ParamId i = 0; i < m.params.size(); ++i)
        if (m.params.key(i).find("/position/") != std::string::npos)
            for (double& v : m.params[i].data) v = 0.0;
    const auto p = prepare_sample(fused_rings(), LiftConfig{}, c);
    CHECK(run(m, p) == p.positions);
}

TEST_CASE("coincident nodes produce finite outputs") {
    auto g = fused_rings();
    g.positions[1] = g.positions[0];
    g.positions[4] = g.positions[0];
    const auto c = small();
    const auto m = build_model(c, 2, 3);
    const auto p = prepare_sample(g, LiftConfig{}, c);
    nn::Tape t(&m.params);
    const auto out = forward(t, m, p);
    t.backward(t.sum(t.mul(out.positions, out.positions)));
    CHECK_FALSE(t.first_nonfinite().has_value());
}

TEST_CASE("isolated nodes keep a defined state") {
    auto g = checks::random_graph(5, 5, 3, 2, 0.0);
    g.edges = {{0, 1}, {1, 2}, {0, 2}};
    const auto c = small();
    const auto m = build_model(c, 2, 3);
    const auto out = run(m, prepare_sample(g, LiftConfig{}, c));
    for (double v : out.data) CHECK(std::isfinite(v));
}

TEST_CASE("missing velocities are rejected when velocity input is on") {
    auto g = fused_rings();
    g.velocities.reset();
    CHECK_THROWS_AS(prepare_sample(g, LiftConfig{}, small()), std::invalid_argument);
    auto c = small();
    c.velocity_input = false;
    CHECK_NOTHROW(prepare_sample(g, LiftConfig{}, c));
}

TEST_CASE("feature width mismatch is rejected") {
    const auto c = small();
    const auto m = build_model(c, 3, 3);
    const auto p = prepare_sample(fused_rings(), LiftConfig{}, c);
    nn::Tape t(&m.params);
    CHECK_THROWS_AS(forward(t, m, p), std::invalid_argument);
}

TEST_CASE("position outputs are E(3) equivariant on a triangle complex") {
    auto g = checks::random_graph(1, 3, 3, 2, 1.0);
    const auto c = small(3, 8);
    const auto m = build_model(c, 2, 3);
    const auto base = run(m, prepare_sample(g, LiftConfig{}, c));
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto t = geom::random_transform(s, 3, true, 10.0);
        const auto moved = run(m, prepare_sample(checks::transform_graph(g, t), LiftConfig{}, c));
        for (std::size_t i = 0; i < 3; ++i) {
            std::vector<double> row(base.row(i), base.row(i) + 3);
            const auto expect = geom::apply_transform(t, geom::Point(row));
            for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(moved(i, k) - expect[k]) <= 1e-9);
        }
    }
}

TEST_CASE("differentiable invariants match the plain evaluation") {
    for (bool dec : {false, true}) {
        auto c = small();
        c.decoupled = dec;
        if (!dec)
            c.messages = {message_kind_from_string("0->0:upper"), message_kind_from_string("0->1:boundary"),
                          message_kind_from_string("1->1:lower"), message_kind_from_string("1->1:upper"),
                          message_kind_from_string("1->2:boundary"), message_kind_from_string("2->1:co-boundary"),
                          message_kind_from_string("2->0:point")};
        auto g = fused_rings();
        const auto rings = lift_rings(g, 6);
        const auto plan = build_plan(g, rings, c);
        const auto m = build_model(c, 2, 3);
        nn::Tape t(&m.params);
        const auto cols = invariant_columns(t, m, plan, t.input(plan.positions));
        REQUIRE(cols.size() == plan.channels.size());
        auto dense = g;
        dense.edges = complete_edges(g.num_nodes());
        const auto own = build_complex(g, rings);
        const auto full = build_complex(dense, {});
        for (std::size_t ci = 0; ci < plan.channels.size(); ++ci) {
            const auto& ch = plan.channels[ci];
            const auto schema = c.schema(ch.kind);
            if (schema.empty()) {
                CHECK_FALSE(cols[ci].has_value());
                continue;
            }
            REQUIRE(cols[ci].has_value());
            const auto& vals = t.value(*cols[ci]);
            const auto& cx = (dec && ch.slot == 0) ? full : own;
            REQUIRE(vals.rows == ch.recv->size());
            for (std::size_t r = 0; r < vals.rows; ++r) {
                const auto ref = inv::compute_invariants(ch.kind, {ch.kind.receiver_rank, (*ch.recv)[r]},
                                                         {ch.kind.sender_rank, (*ch.send)[r]}, cx, g.positions,
                                                         schema);
                for (std::size_t k = 0; k < schema.size(); ++k)
                    CHECK(std::abs(vals(r, k) - ref.values[k]) <= 1e-12 * (1 + std::abs(ref.values[k])));
            }
        }
    }
}

TEST_CASE("checkpoint round trip") {
    auto c = small();
    c.decoupled = true;
    const auto m = build_model(c, 2, 3);
    const auto back = model_from_checkpoint(checkpoint_to_json(m));
    CHECK(back.params == m.params);
    CHECK(to_json(back.config) == to_json(m.config));
    const auto p = prepare_sample(fused_rings(), LiftConfig{}, c);
    CHECK(run(back, p) == run(m, p));

    auto j = checkpoint_to_json(m);
    j["format_version"] = 99;
    CHECK_THROWS_AS(model_from_checkpoint(j), std::invalid_argument);
}

TEST_CASE("model config validation and json") {
    auto c = small();
    CHECK(model_config_from_json(to_json(c)).hidden_width == 8);
    CHECK_THROWS_AS(model_config_from_json({{"hidden_widht", 3}}), std::invalid_argument);

    auto dec = small();
    dec.decoupled = true;
    dec.messages = {message_kind_from_string("0->0:upper")};
    CHECK_THROWS_AS(dec.validate(), std::invalid_argument);

    auto bad = small();
    bad.num_layers = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    auto drop = small();
    drop.dropout = 1.0;
    CHECK_THROWS_AS(drop.validate(), std::invalid_argument);

    CHECK(default_coupled_channels().size() == 6);
    CHECK(default_decoupled_channels().size() == 2);
    auto ntr = small();
    ntr.decoupled = true;
    ntr.node_to_ring = true;
    CHECK(ntr.channels().size() == 3);
}

TEST_CASE("harness passes on a small coupled model and catches the coordinate leak") {
    checks::CheckSettings s;
    s.graphs = 4;
    s.transforms = 4;
    s.audit_graphs = 10;
    s.fd_entries_per_block = 2;
    const auto c = small(2, 8);
    for (const auto& r : checks::run_all_checks(c, LiftConfig{}, s)) CHECK_MESSAGE(r.passed, r.name, " ", r.detail);

    auto leak = c;
    leak.debug_leak_coordinates = true;
    const auto inv = checks::check_scalar_invariance(leak, LiftConfig{}, s);
    CHECK_FALSE(inv.passed);
    CHECK(inv.error > 1e-2);
    CHECK_FALSE(checks::check_position_equivariance(leak, LiftConfig{}, s).passed);

    auto zero = c;
    zero.num_layers = 0;
    CHECK(checks::check_scalar_invariance(zero, LiftConfig{}, s).passed);
}

TEST_CASE("harness passes on a decoupled model") {
    checks::CheckSettings s;
    s.graphs = 4;
    s.transforms = 4;
    s.audit_graphs = 20;
    s.fd_entries_per_block = 2;
    auto c = small(2, 8);
    c.decoupled = true;
    for (const auto& r : checks::run_all_checks(c, LiftConfig{}, s)) CHECK_MESSAGE(r.passed, r.name, " ", r.detail);
}

TEST_CASE("expected message counts follow the closed form") {
    const auto g = fused_rings();
    const auto rings = lift_rings(g, 6);
    auto c = small();
    c.decoupled = true;
    CHECK(checks::expected_messages(c, g, rings) == 6 * 5 + 4 + 3);
    const auto coupled = small();
    CHECK(checks::expected_messages(coupled, g, rings) == prepare_sample(g, LiftConfig{}, coupled).message_count());
}
