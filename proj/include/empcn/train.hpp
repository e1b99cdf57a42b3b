#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"

#include "empcn/model.hpp"
#include "empcn/nn/optim.hpp"

namespace empcn::model {

struct TrainConfig {
    int epochs = 200;
    std::size_t batch_size = 100;
    double lr = 5e-4;
    double weight_decay = 1e-12;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    nn::Schedule schedule = nn::Schedule::Constant;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Normalization of scalar targets: y' = (y - mean) / mad.
struct TargetStats {
    double mean = 0.0;
    double mad = 1.0;
};
TargetStats target_stats(std::span<const Plan> samples);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;
};

struct TrainResult {
    double initial_val_metric = 0.0;
    std::vector<EpochRecord> history;
    TargetStats stats;
};

/// Training loss of one batch: MSE over position coordinates, or MAE of
/// normalized scalar targets.
nn::Var batch_loss(nn::Tape& tape, const Model& model, const Plan& batch, const TargetStats& stats,
                   const ForwardOptions& options = {});

/// Dataset metric in target units: MSE for position targets, MAE for scalars.
double evaluate(const Model& model, std::span<const Plan> samples, const TargetStats& stats,
                std::size_t batch_size = 100);

/// MSE of predicting the initial positions.
double identity_mse(std::span<const Plan> samples);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded mini-batch Adam. Gradients are mean-reduced over each batch.
/// Throws std::runtime_error naming the first non-finite node if the loss or
/// a gradient stops being finite.
TrainResult train(Model& model, std::span<const Plan> train_set, std::span<const Plan> val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace empcn::model
