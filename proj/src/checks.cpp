#include "empcn/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "empcn/model.hpp"
#include "empcn/nn/optim.hpp"

namespace empcn::checks {

using model::ModelConfig;
using model::Plan;
using nn::Matrix;

nlohmann::json to_json(const CheckSettings& s) {
    return {{"graphs", s.graphs},
            {"transforms", s.transforms},
            {"min_nodes", s.min_nodes},
            {"max_nodes", s.max_nodes},
            {"dim", s.dim},
            {"feature_width", s.feature_width},
            {"translation_scale", s.translation_scale},
            {"invariance_tol", s.invariance_tol},
            {"equivariance_tol", s.equivariance_tol},
            {"permutation_tol", s.permutation_tol},
            {"gradient_tol", s.gradient_tol},
            {"fd_step", s.fd_step},
            {"fd_entries_per_block", s.fd_entries_per_block},
            {"gradient_nodes", s.gradient_nodes},
            {"audit_graphs", s.audit_graphs},
            {"seed", s.seed}};
}

CheckSettings check_settings_from_json(const nlohmann::json& j) {
    CheckSettings s;
    if (j.is_null()) return s;
    nlohmann::json merged = to_json(s);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!merged.contains(it.key())) throw std::invalid_argument("unknown check setting \"" + it.key() + "\"");
        merged[it.key()] = it.value();
    }
    s.graphs = merged["graphs"].get<int>();
    s.transforms = merged["transforms"].get<int>();
    s.min_nodes = merged["min_nodes"].get<std::size_t>();
    s.max_nodes = merged["max_nodes"].get<std::size_t>();
    s.dim = merged["dim"].get<std::size_t>();
    s.feature_width = merged["feature_width"].get<std::size_t>();
    s.translation_scale = merged["translation_scale"].get<double>();
    s.invariance_tol = merged["invariance_tol"].get<double>();
    s.equivariance_tol = merged["equivariance_tol"].get<double>();
    s.permutation_tol = merged["permutation_tol"].get<double>();
    s.gradient_tol = merged["gradient_tol"].get<double>();
    s.fd_step = merged["fd_step"].get<double>();
    s.fd_entries_per_block = merged["fd_entries_per_block"].get<std::size_t>();
    s.gradient_nodes = merged["gradient_nodes"].get<std::size_t>();
    s.audit_graphs = merged["audit_graphs"].get<int>();
    s.seed = merged["seed"].get<std::uint64_t>();
    if (s.min_nodes < 2 || s.max_nodes < s.min_nodes) throw std::invalid_argument("check node range is invalid");
    return s;
}

nlohmann::json to_json(const CheckResult& r) {
    return {{"name", r.name},       {"passed", r.passed}, {"error", r.error},  {"tolerance", r.tolerance},
            {"trials", r.trials},   {"seconds", r.seconds}, {"detail", r.detail}};
}

GeometricGraph random_graph(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t fw, double edge_prob) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GeometricGraph g;
    std::vector<geom::Point> vel;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(dim), v(dim), f(fw);
        for (double& e : x) e = normal(rng);
        for (double& e : v) e = normal(rng);
        for (double& e : f) e = normal(rng);
        g.positions.emplace_back(std::move(x));
        vel.emplace_back(std::move(v));
        g.node_features.push_back(std::move(f));
    }
    g.velocities = std::move(vel);
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::uint32_t> parent(0, i - 1);
        edges.insert({parent(rng), i});
    }
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (!edges.count({i, j}) && u(rng) < edge_prob) edges.insert({i, j});
    for (auto [a, b] : edges) g.edges.push_back({a, b});
    return g;
}

GeometricGraph transform_graph(const GeometricGraph& g, const geom::EuclideanTransform& t) {
    GeometricGraph out = g;
    for (auto& p : out.positions) p = geom::apply_transform(t, p);
    if (out.velocities)
        for (auto& v : *out.velocities) v = geom::apply_rotation(t, v);
    if (auto* tp = std::get_if<std::vector<geom::Point>>(&out.target))
        for (auto& p : *tp) p = geom::apply_transform(t, p);
    return out;
}

GeometricGraph permute_graph(const GeometricGraph& g, const std::vector<std::uint32_t>& perm) {
    const std::size_t n = g.num_nodes();
    if (perm.size() != n) throw std::invalid_argument("permutation size does not match the graph");
    GeometricGraph out = g;
    for (std::size_t i = 0; i < n; ++i) {
        out.positions[perm[i]] = g.positions[i];
        out.node_features[perm[i]] = g.node_features[i];
        if (g.velocities) (*out.velocities)[perm[i]] = (*g.velocities)[i];
    }
    if (const auto* tp = std::get_if<std::vector<geom::Point>>(&g.target)) {
        auto& dst = std::get<std::vector<geom::Point>>(out.target);
        for (std::size_t i = 0; i < n; ++i) dst[perm[i]] = (*tp)[i];
    }
    for (auto& e : out.edges) e = {perm[e.u], perm[e.v]};
    if (out.two_cells)
        for (auto& c : *out.two_cells)
            for (auto& v : c) v = perm[v];
    return out;
}

std::size_t expected_messages(const ModelConfig& config, const GeometricGraph& g, const std::vector<VertexCycle>& rings) {
    const std::size_t n = g.num_nodes();
    std::vector<std::size_t> deg(n, 0);
    for (const auto& e : g.edges) ++deg[e.u], ++deg[e.v];
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> rings_on_edge;
    std::size_t ring_vertices = 0, ring_pairs = 0;
    for (const auto& r : rings) {
        ring_vertices += r.size();
        ring_pairs += r.size() * (r.size() - 1);
        for (std::size_t i = 0; i < r.size(); ++i) {
            auto a = r[i], b = r[(i + 1) % r.size()];
            ++rings_on_edge[{std::min(a, b), std::max(a, b)}];
        }
    }
    std::size_t total = 0;
    for (const auto& k : config.channels()) {
        const int s = k.sender_rank, r = k.receiver_rank;
        const bool dense = config.decoupled && s == 0 && r == 0;
        const std::size_t edges = dense ? n * (n - 1) / 2 : g.edges.size();
        switch (k.adjacency) {
            case Adjacency::Upper:
                total += s == 0 ? 2 * edges : ring_pairs;
                break;
            case Adjacency::Lower:
                if (s == 1) {
                    for (auto d : deg) total += d * (d - 1);
                } else {
                    for (const auto& [e, c] : rings_on_edge) total += c * (c - 1);
                }
                break;
            case Adjacency::Boundary:
            case Adjacency::Coboundary:
            case Adjacency::Point:
                total += std::max(s, r) == 1 ? 2 * edges : ring_vertices;
                break;
        }
    }
    return total;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Case {
    GeometricGraph graph;
    std::vector<VertexCycle> rings;
};

Case make_case(std::uint64_t seed, const CheckSettings& s, const LiftConfig& lift_cfg, std::size_t nodes) {
    Case c;
    c.graph = random_graph(seed, nodes, s.dim, s.feature_width);
    c.rings = lift(c.graph, lift_cfg);
    c.graph.two_cells = c.rings;
    return c;
}

std::size_t case_nodes(std::uint64_t seed, const CheckSettings& s) {
    std::mt19937_64 rng(seed);
    return std::uniform_int_distribution<std::size_t>(s.min_nodes, s.max_nodes)(rng);
}

struct Output {
    Matrix positions;
    double scalar = 0.0;
};

Output run(const model::Model& m, const GeometricGraph& g) {
    const Plan p = model::build_plan(g, *g.two_cells, m.config);
    nn::Tape t(&m.params);
    const auto out = model::forward(t, m, p);
    Output o;
    o.positions = t.value(out.positions);
    if (out.scalar) o.scalar = t.value(*out.scalar).data[0];
    return o;
}

ModelConfig with_seed(ModelConfig c, const CheckSettings& s) {
    c.init_seed = s.seed;
    return c;
}

}  // namespace

CheckResult check_scalar_invariance(const ModelConfig& config, const LiftConfig& lift_cfg, const CheckSettings& s) {
    const auto t0 = Clock::now();
    ModelConfig c = with_seed(config, s);
    c.readout = model::Readout::Scalar;
    const auto m = model::build_model(c, s.feature_width, s.dim);
    CheckResult r{"scalar_invariance", false, 0.0, s.invariance_tol, 0, 0.0, ""};
    for (int gi = 0; gi < s.graphs; ++gi) {
        const auto seed = s.seed * 1000003 + static_cast<std::uint64_t>(gi);
        const Case cs = make_case(seed, s, lift_cfg, case_nodes(seed, s));
        const double y0 = run(m, cs.graph).scalar;
        for (int ti = 0; ti < s.transforms; ++ti) {
            const auto t = geom::random_transform(seed * 7919 + static_cast<std::uint64_t>(ti), s.dim, ti % 2 == 1,
                                                  s.translation_scale);
            const double y = run(m, transform_graph(cs.graph, t)).scalar;
            const double e = std::abs(y - y0) / (1.0 + std::abs(y0));
            if (!(e <= r.error)) {
                r.error = std::isnan(e) ? INFINITY : e;
                r.detail = "graph " + std::to_string(gi) + ", transform " + std::to_string(ti);
            }
            ++r.trials;
        }
    }
    r.passed = r.error <= r.tolerance;
    r.seconds = since(t0);
    return r;
}

CheckResult check_position_equivariance(const ModelConfig& config, const LiftConfig& lift_cfg, const CheckSettings& s) {
    const auto t0 = Clock::now();
    const auto m = model::build_model(with_seed(config, s), s.feature_width, s.dim);
    CheckResult r{"position_equivariance", false, 0.0, s.equivariance_tol, 0, 0.0, ""};
    for (int gi = 0; gi < s.graphs; ++gi) {
        const auto seed = s.seed * 1000003 + static_cast<std::uint64_t>(gi);
        const Case cs = make_case(seed, s, lift_cfg, case_nodes(seed, s));
        const Matrix x0 = run(m, cs.graph).positions;
        for (int ti = 0; ti < s.transforms; ++ti) {
            const auto t = geom::random_transform(seed * 7919 + static_cast<std::uint64_t>(ti), s.dim, ti % 2 == 1,
                                                  s.translation_scale);
            const Matrix x = run(m, transform_graph(cs.graph, t)).positions;
            for (std::size_t i = 0; i < x0.rows; ++i) {
                const geom::Point want = geom::apply_transform(t, geom::Point(std::vector<double>(x0.row(i), x0.row(i) + x0.cols)));
                for (std::size_t k = 0; k < x0.cols; ++k) {
                    const double e = std::abs(x(i, k) - want[k]);
                    if (!(e <= r.error)) {
                        r.error = std::isnan(e) ? INFINITY : e;
                        r.detail = "graph " + std::to_string(gi) + ", transform " + std::to_string(ti);
                    }
                }
            }
            ++r.trials;
        }
    }
    r.passed = r.error <= r.tolerance;
    r.seconds = since(t0);
    return r;
}

CheckResult check_permutation_equivariance(const ModelConfig& config, const LiftConfig& lift_cfg,
                                           const CheckSettings& s) {
    const auto t0 = Clock::now();
    ModelConfig c = with_seed(config, s);
    c.readout = model::Readout::Scalar;
    const auto m = model::build_model(c, s.feature_width, s.dim);
    CheckResult r{"permutation_equivariance", false, 0.0, s.permutation_tol, 0, 0.0, ""};
    for (int gi = 0; gi < s.graphs; ++gi) {
        const auto seed = s.seed * 1000003 + static_cast<std::uint64_t>(gi);
        const Case cs = make_case(seed, s, lift_cfg, case_nodes(seed, s));
        const Output o0 = run(m, cs.graph);
        std::vector<std::uint32_t> perm(cs.graph.num_nodes());
        std::iota(perm.begin(), perm.end(), 0u);
        std::mt19937_64 rng(seed);
        std::shuffle(perm.begin(), perm.end(), rng);
        const Output o = run(m, permute_graph(cs.graph, perm));
        double e = std::abs(o.scalar - o0.scalar) / (1.0 + std::abs(o0.scalar));
        for (std::size_t i = 0; i < perm.size(); ++i)
            for (std::size_t k = 0; k < s.dim; ++k)
                e = std::max(e, std::abs(o.positions(perm[i], k) - o0.positions(i, k)) / (1.0 + std::abs(o0.positions(i, k))));
        if (!(e <= r.error)) {
            r.error = std::isnan(e) ? INFINITY : e;
            r.detail = "graph " + std::to_string(gi);
        }
        ++r.trials;
    }
    r.passed = r.error <= r.tolerance;
    r.seconds = since(t0);
    return r;
}

CheckResult check_gradient(const ModelConfig& config, const LiftConfig& lift_cfg, const CheckSettings& s) {
    const auto t0 = Clock::now();
    const auto m = model::build_model(with_seed(config, s), s.feature_width, s.dim);
    const Case cs = make_case(s.seed * 1000003 + 999, s, lift_cfg, s.gradient_nodes);
    const Plan p = model::build_plan(cs.graph, cs.rings, m.config);
    std::mt19937_64 rng(s.seed + 17);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix target(p.positions.rows, p.positions.cols);
    for (double& v : target.data) v = normal(rng);

    auto record = [&](nn::Tape& t) {
        const auto out = model::forward(t, m, p);
        nn::Var d = t.sub(out.positions, t.constant(target));
        nn::Var loss = t.mean(t.mul(d, d));
        if (out.scalar) loss = t.add(loss, t.sum(*out.scalar));
        return loss;
    };
    nn::Tape tape(&m.params);
    const nn::Var loss = record(tape);
    tape.backward(loss);
    auto grads = nn::Gradients::zeros_like(m.params);
    tape.accumulate_param_grads(grads);
    auto fn = [&](const nn::Params& params) {
        nn::Tape t(&params);
        return t.value(record(t)).data[0];
    };
    const auto g = nn::finite_diff_check(fn, m.params, grads, s.fd_step, nn::kGradCheckFloor, s.fd_entries_per_block);
    CheckResult r{"gradient", false, g.max_rel_error, s.gradient_tol, static_cast<int>(g.checked), 0.0, ""};
    r.detail = "worst " + g.worst_key + "[" + std::to_string(g.worst_entry) + "]: analytic " +
               std::to_string(g.analytic) + ", numeric " + std::to_string(g.numeric) + "; rings " +
               std::to_string(cs.rings.size());
    r.passed = std::isfinite(r.error) && r.error <= r.tolerance;
    r.seconds = since(t0);
    return r;
}

CheckResult check_message_count(const ModelConfig& config, const LiftConfig& lift_cfg, const CheckSettings& s) {
    const auto t0 = Clock::now();
    const auto m = model::build_model(with_seed(config, s), s.feature_width, s.dim);
    CheckResult r{"message_count", true, 0.0, 0.0, 0, 0.0, ""};
    std::uint64_t seed = s.seed * 1000003 + 5000;
    while (r.trials < s.audit_graphs) {
        const auto nodes = case_nodes(seed, s);
        Case cs = make_case(seed++, s, lift_cfg, nodes);
        if (config.decoupled && cs.rings.size() >= nodes) continue;
        const Plan p = model::build_plan(cs.graph, cs.rings, m.config);
        nn::Tape t(&m.params);
        const auto out = model::forward(t, m, p);
        const std::size_t want = expected_messages(m.config, cs.graph, cs.rings);
        std::size_t ring_sum = 0;
        for (const auto& ring : cs.rings) ring_sum += ring.size();
        const std::size_t n = nodes;
        for (auto got : out.messages_per_layer) {
            const double diff = std::abs(static_cast<double>(got) - static_cast<double>(want));
            r.error = std::max(r.error, diff);
            bool ok = got == want;
            if (config.decoupled && !config.node_to_ring && config.messages.empty())
                ok = ok && got == n * (n - 1) + ring_sum && got <= n * n + cs.rings.size() * n;
            if (!ok) {
                r.passed = false;
                r.detail = "graph seed " + std::to_string(seed - 1) + ": counted " + std::to_string(got) + ", expected " +
                           std::to_string(want);
            }
        }
        if (p.message_count() != want) r.passed = false;
        ++r.trials;
    }
    r.seconds = since(t0);
    return r;
}

std::vector<CheckResult> run_all_checks(const ModelConfig& config, const LiftConfig& lift_cfg, const CheckSettings& s) {
    return {check_scalar_invariance(config, lift_cfg, s), check_position_equivariance(config, lift_cfg, s),
            check_permutation_equivariance(config, lift_cfg, s), check_gradient(config, lift_cfg, s),
            check_message_count(config, lift_cfg, s)};
}

}  // namespace empcn::checks
