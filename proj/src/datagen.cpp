#include "empcn/datagen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace empcn::data {

using geom::Point;

void NBodyConfig::validate() const {
    if (particles < 2) throw std::invalid_argument("n-body simulation needs at least 2 particles");
    if (steps < 1) throw std::invalid_argument("n-body simulation needs at least 1 step");
    if (!(dt > 0.0)) throw std::invalid_argument("n-body dt must be positive");
    if (dim < 1) throw std::invalid_argument("n-body dim must be >= 1");
    if (velocity_scale < 0.0) throw std::invalid_argument("n-body velocity_scale must be >= 0");
}

nlohmann::json to_json(const NBodyConfig& c) {
    return {{"particles", c.particles}, {"steps", c.steps}, {"dt", c.dt}, {"velocity_scale", c.velocity_scale},
            {"dim", c.dim}};
}

NBodyConfig nbody_config_from_json(const nlohmann::json& j) {
    NBodyConfig c;
    if (j.is_null()) return c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k == "particles") c.particles = it->get<std::size_t>();
        else if (k == "steps") c.steps = it->get<std::size_t>();
        else if (k == "dt") c.dt = it->get<double>();
        else if (k == "velocity_scale") c.velocity_scale = it->get<double>();
        else if (k == "dim") c.dim = it->get<std::size_t>();
        else throw std::invalid_argument("unknown simulation config key \"" + k + "\"");
    }
    c.validate();
    return c;
}

std::vector<Point> nbody_accelerations(const std::vector<Point>& x, const std::vector<double>& q) {
    const std::size_t n = x.size(), d = x.empty() ? 0 : x[0].dim();
    std::vector<std::vector<double>> a(n, std::vector<double>(d, 0.0));
    std::vector<double> r(d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double r2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                r[k] = x[i][k] - x[j][k];
                r2 += r[k] * r[k];
            }
            const double len = std::sqrt(r2);
            const double f = q[i] * q[j] / (len * len * len + kSoftening);
            for (std::size_t k = 0; k < d; ++k) a[i][k] += f * r[k];
        }
    std::vector<Point> out;
    out.reserve(n);
    for (auto& v : a) out.emplace_back(std::move(v));
    return out;
}

namespace {

// Antiderivative of s / (s^3 + c^3).
double force_antiderivative(double s, double c) {
    return std::log((s * s - c * s + c * c) / ((s + c) * (s + c))) / (6.0 * c) +
           std::atan((2.0 * s - c) / (c * std::sqrt(3.0))) / (c * std::sqrt(3.0));
}

// U(r) = q_i q_j * integral_r^inf s / (s^3 + eps) ds, so -dU/dr matches the force.
double pair_potential(double r) {
    const double c = std::cbrt(kSoftening);
    const double at_inf = std::numbers::pi / 2.0 / (c * std::sqrt(3.0));
    return at_inf - force_antiderivative(r, c);
}

}  // namespace

double nbody_energy(const std::vector<Point>& x, const std::vector<Point>& v, const std::vector<double>& q) {
    double e = 0.0;
    for (const auto& vi : v)
        for (std::size_t k = 0; k < vi.dim(); ++k) e += 0.5 * vi[k] * vi[k];
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) e += q[i] * q[j] * pair_potential(geom::distance(x[i], x[j]));
    return e;
}

Trajectory simulate_nbody(const NBodyConfig& c, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const std::size_t n = c.particles, d = c.dim;

    Trajectory t;
    t.seed = seed;
    std::vector<std::vector<double>> x(n, std::vector<double>(d)), v(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) t.charges.push_back(coin(rng) ? 1.0 : -1.0);
    for (auto& xi : x)
        for (double& e : xi) e = normal(rng);
    for (auto& vi : v)
        for (double& e : vi) e = c.velocity_scale * normal(rng);

    auto to_points = [](const std::vector<std::vector<double>>& m) {
        std::vector<Point> out;
        for (const auto& r : m) out.emplace_back(r);
        return out;
    };
    GeometricGraph& g = t.initial;
    g.positions = to_points(x);
    g.velocities = to_points(v);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double e : v[i]) s += e * e;
        g.node_features.push_back({std::sqrt(s), t.charges[i]});
    }
    g.edges = complete_edges(n);

    auto pos = g.positions;
    auto acc = nbody_accelerations(pos, t.charges);
    const double h = 0.5 * c.dt;
    for (std::size_t step = 0; step < c.steps; ++step) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                v[i][k] += h * acc[i][k];
                x[i][k] += c.dt * v[i][k];
            }
        pos = to_points(x);
        acc = nbody_accelerations(pos, t.charges);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) v[i][k] += h * acc[i][k];
    }
    t.final_positions = to_points(x);
    t.final_velocities = to_points(v);
    g.target = t.final_positions;
    g.meta = {{"charges", t.charges}, {"steps", c.steps}, {"dt", c.dt}, {"seed", seed}};
    return t;
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t k) {
    // splitmix64 finalizer: a bijection, so distinct k give distinct seeds.
    std::uint64_t z = seed + (k + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

NBodySplits split(std::vector<GeometricGraph> all, std::size_t n_train, std::size_t n_val) {
    NBodySplits s;
    for (std::size_t i = 0; i < all.size(); ++i) {
        auto& dst = i < n_train ? s.train : (i < n_train + n_val ? s.val : s.test);
        dst.push_back(std::move(all[i]));
    }
    return s;
}

void check_sizes(std::size_t a, std::size_t b, std::size_t c) {
    if (a < 1 || b < 1 || c < 1) throw std::invalid_argument("every dataset split needs at least one sample");
}

}  // namespace

NBodySplits make_nbody_dataset(std::size_t n_train, std::size_t n_val, std::size_t n_test, std::uint64_t seed,
                               const NBodyConfig& config) {
    check_sizes(n_train, n_val, n_test);
    config.validate();
    const auto total = static_cast<std::int64_t>(n_train + n_val + n_test);
    std::vector<GeometricGraph> all(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < total; ++k)
        all[static_cast<std::size_t>(k)] = simulate_nbody(config, sample_seed(seed, static_cast<std::uint64_t>(k))).initial;
    return split(std::move(all), n_train, n_val);
}

namespace serial {
NBodySplits make_nbody_dataset(std::size_t n_train, std::size_t n_val, std::size_t n_test, std::uint64_t seed,
                               const NBodyConfig& config) {
    check_sizes(n_train, n_val, n_test);
    config.validate();
    std::vector<GeometricGraph> all;
    for (std::size_t k = 0; k < n_train + n_val + n_test; ++k) all.push_back(simulate_nbody(config, sample_seed(seed, k)).initial);
    return split(std::move(all), n_train, n_val);
}
}  // namespace serial

std::vector<VertexCycle> skeleton_templates() {
    return {{0, 3, 8},      {6, 7, 8},        {1, 2, 3},       {24, 25, 26},         {21, 22, 23},
            {7, 8, 2, 3},   {24, 26, 17, 19}, {25, 7, 18, 2},  {6, 7, 8, 1, 2, 3}};
}

}  // namespace empcn::data
