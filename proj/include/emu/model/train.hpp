#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "emu/ad/adam.hpp"
#include "emu/model/dc_model.hpp"
#include "emu/model/loss.hpp"

namespace emu::model {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;  // patches per step
    double learning_rate = 1e-4;
    std::uint64_t seed = 0;
    bool use_regularizer = true;
};

struct EpochLog {
    std::size_t epoch = 0;
    double total = 0.0;       // mean over steps, regularizer included
    double bce = 0.0;
    double regression = 0.0;
    double regularizer = 0.0;
    std::vector<double> dropout_rates;
    std::optional<double> val_metric;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    std::size_t steps = 0;
};

// Optional per-epoch evaluation hook (e.g. held-out RMSE).
using Validator = std::function<double(DcModel&)>;

// Shuffled minibatch training over pre-extracted patches. Every source of
// randomness derives from cfg.seed, so runs are reproducible. Non-finite
// losses or gradients abort with a numeric error naming the epoch/step.
TrainResult train(DcModel& model, const std::vector<Batch>& patches, const TrainConfig& cfg,
                  const Validator& validator = nullptr);

}  // namespace emu::model
