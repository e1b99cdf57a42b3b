#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "empcn/nn/params.hpp"

namespace empcn::nn {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled: p -= lr * weight_decay * p before the Adam step.
    double weight_decay = 0.0;
};

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::int64_t step = 0;

    static AdamState zeros_like(const Params& p);
};

/// One bias-corrected Adam step at learning rate `lr` (the schedule's value
/// for this step; `config.lr` is ignored).
void adam_step(Params& params, const Gradients& grads, AdamState& state, const AdamConfig& config, double lr);

enum class Schedule { Constant, Cosine };
Schedule schedule_from_string(const std::string& s);
std::string to_string(Schedule s);

/// Cosine annealing from lr0 at step 0 to 0 at `total_steps`.
double scheduled_lr(Schedule s, double lr0, std::int64_t step, std::int64_t total_steps);

/// Seeded inverted-dropout mask: entries are 0 with probability `rate`,
/// otherwise 1 / (1 - rate).
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_key;
    std::size_t worst_entry = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

/// Relative error |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

inline constexpr double kGradCheckFloor = 1e-5;

/// Compares `analytic` against central differences of `loss(params)` with
/// step h. `loss` must be a pure function of the parameter values.
/// With `max_entries_per_block` > 0 only that many evenly spaced entries of
/// each block are probed.
GradCheckResult finite_diff_check(const std::function<double(const Params&)>& loss, Params params,
                                  const Gradients& analytic, double h, double floor = kGradCheckFloor,
                                  std::size_t max_entries_per_block = 0);

}  // namespace empcn::nn
