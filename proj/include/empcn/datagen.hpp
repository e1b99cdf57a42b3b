#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "empcn/graph.hpp"

namespace empcn::data {

inline constexpr double kSoftening = 1e-3;

struct NBodyConfig {
    std::size_t particles = 5;
    std::size_t steps = 1000;
    double dt = 1e-3;
    double velocity_scale = 0.5;
    std::size_t dim = 3;

    void validate() const;
};

nlohmann::json to_json(const NBodyConfig& c);
NBodyConfig nbody_config_from_json(const nlohmann::json& j);

struct Trajectory {
    /// Positions, velocities, features [|v|, charge], complete edge set and
    /// the final positions as target.
    GeometricGraph initial;
    std::vector<geom::Point> final_positions;
    std::vector<geom::Point> final_velocities;
    std::vector<double> charges;
    std::uint64_t seed = 0;
};

/// Charged particles with force q_i q_j (x_i - x_j) / (|x_i - x_j|^3 + kSoftening)
/// integrated by kick-drift-kick leapfrog.
Trajectory simulate_nbody(const NBodyConfig& config, std::uint64_t seed);

/// Pairwise accelerations (unit masses) for the given state.
std::vector<geom::Point> nbody_accelerations(const std::vector<geom::Point>& x, const std::vector<double>& q);

/// Kinetic energy plus the potential whose gradient is the softened force.
double nbody_energy(const std::vector<geom::Point>& x, const std::vector<geom::Point>& v, const std::vector<double>& q);

struct NBodySplits {
    std::vector<GeometricGraph> train, val, test;
};

/// Seed of sample k (counting train, then val, then test). Distinct k give
/// distinct seeds.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t k);

/// Trajectories are simulated in parallel; the result does not depend on the
/// thread count.
NBodySplits make_nbody_dataset(std::size_t n_train, std::size_t n_val, std::size_t n_test, std::uint64_t seed,
                               const NBodyConfig& config = {});

namespace serial {
NBodySplits make_nbody_dataset(std::size_t n_train, std::size_t n_val, std::size_t n_test, std::uint64_t seed,
                               const NBodyConfig& config = {});
}

/// Hand-specified rings of the 31-joint motion-capture skeleton.
std::vector<VertexCycle> skeleton_templates();

}  // namespace empcn::data
