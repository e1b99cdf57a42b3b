#include "empcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace empcn::model {

using nn::Matrix;
using nn::Tape;
using nn::Var;

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("train.epochs must be >= 0");
    if (batch_size == 0) throw std::invalid_argument("train.batch_size must be positive");
    if (lr < 0.0) throw std::invalid_argument("train.lr must be >= 0");
    if (weight_decay < 0.0) throw std::invalid_argument("train.weight_decay must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},   {"batch_size", c.batch_size}, {"lr", c.lr},
            {"weight_decay", c.weight_decay}, {"beta1", c.beta1}, {"beta2", c.beta2},
            {"eps", c.eps},         {"schedule", nn::to_string(c.schedule)}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw std::invalid_argument("train config must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "epochs") c.epochs = v.get<int>();
        else if (k == "batch_size") c.batch_size = v.get<std::size_t>();
        else if (k == "lr") c.lr = v.get<double>();
        else if (k == "weight_decay") c.weight_decay = v.get<double>();
        else if (k == "beta1") c.beta1 = v.get<double>();
        else if (k == "beta2") c.beta2 = v.get<double>();
        else if (k == "eps") c.eps = v.get<double>();
        else if (k == "schedule") c.schedule = nn::schedule_from_string(v.get<std::string>());
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else throw std::invalid_argument("unknown train config key \"" + k + "\"");
    }
    c.validate();
    return c;
}

TargetStats target_stats(std::span<const Plan> samples) {
    std::vector<double> y;
    for (const auto& p : samples) y.insert(y.end(), p.target_scalar.begin(), p.target_scalar.end());
    TargetStats s;
    if (y.empty()) return s;
    s.mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double mad = 0.0;
    for (double v : y) mad += std::abs(v - s.mean);
    mad /= static_cast<double>(y.size());
    s.mad = mad > 0.0 ? mad : 1.0;
    return s;
}

Var batch_loss(Tape& t, const Model& m, const Plan& b, const TargetStats& stats, const ForwardOptions& opt) {
    const ForwardOutput out = forward(t, m, b, opt);
    if (m.config.readout == Readout::Positions) {
        if (b.target_positions.rows != b.num_nodes) throw std::invalid_argument("batch lacks position targets");
        Var d = t.sub(out.positions, t.constant(b.target_positions));
        return t.mean(t.mul(d, d));
    }
    if (b.target_scalar.size() != b.num_graphs) throw std::invalid_argument("batch lacks scalar targets");
    Matrix y(b.num_graphs, 1);
    for (std::size_t i = 0; i < b.num_graphs; ++i) y.data[i] = (b.target_scalar[i] - stats.mean) / stats.mad;
    return t.mean(t.abs(t.sub(*out.scalar, t.constant(std::move(y)))));
}

namespace {

Plan batch_of(std::span<const Plan> samples, std::span<const std::size_t> order) {
    std::vector<const Plan*> parts;
    parts.reserve(order.size());
    for (auto i : order) parts.push_back(&samples[i]);
    return concat_plans(parts);
}

}  // namespace

double evaluate(const Model& m, std::span<const Plan> samples, const TargetStats& stats, std::size_t batch_size) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < order.size(); s += batch_size) {
        const auto e = std::min(order.size(), s + batch_size);
        const Plan b = batch_of(samples, std::span(order).subspan(s, e - s));
        Tape t(&m.params);
        const ForwardOutput out = forward(t, m, b);
        if (m.config.readout == Readout::Positions) {
            const Matrix& x = t.value(out.positions);
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double d = x.data[k] - b.target_positions.data[k];
                total += d * d;
            }
            count += x.size();
        } else {
            const Matrix& y = t.value(*out.scalar);
            for (std::size_t k = 0; k < b.num_graphs; ++k)
                total += std::abs(y.data[k] * stats.mad + stats.mean - b.target_scalar[k]);
            count += b.num_graphs;
        }
    }
    return total / static_cast<double>(count);
}

double identity_mse(std::span<const Plan> samples) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& p : samples) {
        if (p.target_positions.rows != p.num_nodes) throw std::invalid_argument("identity_mse: sample lacks position targets");
        for (std::size_t k = 0; k < p.positions.size(); ++k) {
            const double d = p.positions.data[k] - p.target_positions.data[k];
            total += d * d;
        }
        count += p.positions.size();
    }
    return total / static_cast<double>(count);
}

TrainResult train(Model& m, std::span<const Plan> train_set, std::span<const Plan> val_set, const TrainConfig& c,
                  const EpochCallback& on_epoch) {
    c.validate();
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    TrainResult r;
    r.stats = target_stats(train_set);
    const bool has_val = !val_set.empty();
    if (has_val) r.initial_val_metric = evaluate(m, val_set, r.stats, c.batch_size);

    const nn::AdamConfig adam{c.lr, c.beta1, c.beta2, c.eps, c.weight_decay};
    nn::AdamState state = nn::AdamState::zeros_like(m.params);
    nn::Gradients grads = nn::Gradients::zeros_like(m.params);
    const auto steps_per_epoch = static_cast<std::int64_t>((train_set.size() + c.batch_size - 1) / c.batch_size);
    const std::int64_t total_steps = steps_per_epoch * c.epochs;
    std::mt19937_64 rng(c.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::int64_t step = 0;

    for (int epoch = 1; epoch <= c.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t s = 0; s < order.size(); s += c.batch_size) {
            const auto e = std::min(order.size(), s + c.batch_size);
            const Plan b = batch_of(train_set, std::span(order).subspan(s, e - s));
            Tape t(&m.params);
            const ForwardOptions opt{true, c.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(step)};
            const Var loss = batch_loss(t, m, b, r.stats, opt);
            const double lv = t.value(loss).data[0];
            if (!std::isfinite(lv)) {
                const auto where = t.first_nonfinite();
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                         std::to_string(step) + "; first non-finite value: " +
                                         (where ? *where : std::string("loss")));
            }
            t.backward(loss);
            grads.set_zero();
            t.accumulate_param_grads(grads);
            for (nn::ParamId i = 0; i < m.params.size(); ++i)
                for (double g : grads.blocks[i].data)
                    if (!std::isfinite(g))
                        throw std::runtime_error("non-finite gradient for \"" + m.params.key(i) + "\" at epoch " +
                                                 std::to_string(epoch));
            nn::adam_step(m.params, grads, state, adam, nn::scheduled_lr(c.schedule, c.lr, step, total_steps));
            loss_sum += lv * static_cast<double>(e - s);
            ++step;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_metric = has_val ? evaluate(m, val_set, r.stats, c.batch_size) : 0.0;
        r.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return r;
}

}  // namespace empcn::model
