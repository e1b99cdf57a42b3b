#include "empcn/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace empcn::nn {

AdamState AdamState::zeros_like(const Params& p) {
    AdamState s;
    for (ParamId i = 0; i < p.size(); ++i) {
        s.m.emplace_back(p[i].rows, p[i].cols);
        s.v.emplace_back(p[i].rows, p[i].cols);
    }
    return s;
}

void adam_step(Params& params, const Gradients& grads, AdamState& state, const AdamConfig& c, double lr) {
    if (grads.blocks.size() != params.size() || state.m.size() != params.size())
        throw std::invalid_argument("adam_step: parameter, gradient and state blocks do not match");
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (ParamId i = 0; i < params.size(); ++i) {
        Matrix& p = params[i];
        const Matrix& g = grads.blocks[i];
        if (!g.same_shape(p) || !state.m[i].same_shape(p))
            throw std::invalid_argument("adam_step: shape mismatch for \"" + params.key(i) + "\"");
        for (std::size_t k = 0; k < p.size(); ++k) {
            double& m = state.m[i].data[k];
            double& v = state.v[i].data[k];
            m = c.beta1 * m + (1.0 - c.beta1) * g.data[k];
            v = c.beta2 * v + (1.0 - c.beta2) * g.data[k] * g.data[k];
            p.data[k] -= lr * c.weight_decay * p.data[k];
            p.data[k] -= lr * (m / bc1) / (std::sqrt(v / bc2) + c.eps);
        }
    }
}

Schedule schedule_from_string(const std::string& s) {
    if (s == "constant") return Schedule::Constant;
    if (s == "cosine") return Schedule::Cosine;
    throw std::invalid_argument("unknown learning-rate schedule \"" + s + "\"");
}

std::string to_string(Schedule s) { return s == Schedule::Constant ? "constant" : "cosine"; }

double scheduled_lr(Schedule s, double lr0, std::int64_t step, std::int64_t total_steps) {
    if (s == Schedule::Constant || total_steps <= 0) return lr0;
    const double t = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
    return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * t));
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
    Matrix m(rows, cols, 1.0);
    if (rate == 0.0) return m;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 / (1.0 - rate);
    for (double& x : m.data) x = u(rng) < rate ? 0.0 : keep;
    return m;
}

double relative_error(double a, double n, double floor) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

GradCheckResult finite_diff_check(const std::function<double(const Params&)>& loss, Params params,
                                  const Gradients& analytic, double h, double floor,
                                  std::size_t max_entries_per_block) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");
    if (analytic.blocks.size() != params.size())
        throw std::invalid_argument("finite_diff_check: gradient blocks do not match parameters");
    GradCheckResult r;
    for (ParamId i = 0; i < params.size(); ++i) {
        const std::size_t n = params[i].size();
        std::size_t stride = 1;
        if (max_entries_per_block > 0 && n > max_entries_per_block)
            stride = (n + max_entries_per_block - 1) / max_entries_per_block;
        for (std::size_t k = 0; k < n; k += stride) {
            const double orig = params[i].data[k];
            params[i].data[k] = orig + h;
            const double up = loss(params);
            params[i].data[k] = orig - h;
            const double down = loss(params);
            params[i].data[k] = orig;
            const double num = (up - down) / (2.0 * h);
            const double a = analytic.blocks[i].data[k];
            const double e = relative_error(a, num, floor);
            ++r.checked;
            if (r.worst_key.empty() || e > r.max_rel_error) {
                r.max_rel_error = e;
                r.worst_key = params.key(i);
                r.worst_entry = k;
                r.analytic = a;
                r.numeric = num;
            }
        }
    }
    return r;
}

}  // namespace empcn::nn
