#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctts/data.hpp"
#include "ctts/model.hpp"

namespace ctts {

struct TrainConfig {
    int batch_size = 128;
    int max_epochs = 300;
    int patience = 15;
    double learning_rate = 1e-3;
    double lr_decay_factor = 0.1;
    std::int64_t seed = 0;
    int threads = 1;
    // per-class loss weights indexed by label + 1; all 1.0 keeps the
    // natural distribution
    std::array<double, 3> class_weights = {1.0, 1.0, 1.0};
};

struct TrainLogEntry {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
    int best_epoch = 0;
};

struct TrainingError : std::runtime_error {
    TrainingError(const std::string& msg, int epoch_, int batch_)
        : std::runtime_error(msg + " (epoch " + std::to_string(epoch_) + ", batch " +
                             std::to_string(batch_) + ")"),
          epoch(epoch_),
          batch(batch_) {}
    int epoch;
    int batch;
};

// One moment pair per parameter tensor, in CttsParams::named() order.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step_count = 0;

    static AdamState for_params(const CttsParams& params);
};

// Bias-corrected Adam update, applied in place. `grads` holds one gradient
// buffer per tensor in named() order. Throws TrainingError on non-finite
// gradients (epoch/batch taken from the arguments for the message).
void adam_step(CttsParams& params, const std::vector<std::vector<double>>& grads, AdamState& state,
               double lr, int epoch = 0, int batch = 0);

struct LossAccuracy {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Mean cross-entropy and argmax accuracy over the windows; forward-only,
// mutates nothing.
LossAccuracy evaluate_loss(const CttsParams& params, const std::vector<LabeledWindow>& windows,
                           const CttsConfig& config);

struct FitResult {
    CttsParams params;  // from the best validation epoch
    TrainLog log;
};

// Called on each new best validation epoch, e.g. to write a checkpoint.
using BestEpochHook = std::function<void(const CttsParams&, const TrainLog&)>;

// Mini-batch Adam with per-epoch shuffling, lr decay after
// floor(patience/3) stagnant epochs and early stopping after `patience`.
// sigma_max is frozen from the train split before the first epoch.
// Bit-reproducible for fixed (data, configs, seed) at any thread count.
FitResult fit(const DatasetSplit& split, const CttsConfig& model_config,
              const TrainConfig& train_config, const BestEpochHook& on_best = nullptr);

void write_train_log_csv(const std::string& path, const TrainLog& log);

}  // namespace ctts
