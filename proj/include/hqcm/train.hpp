#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hqcm/data.hpp"
#include "hqcm/loss.hpp"
#include "hqcm/model.hpp"
#include "hqcm/optim.hpp"

namespace hqcm {

struct TrainConfig {
    int max_epochs = 40;
    int batch_size = 64;
    double learning_rate = 0.011;
    double weight_decay = 1e-4;
    double clip_max_norm = 1.0;
    double lr_factor = 0.5;
    int lr_patience = 3;
    double lr_threshold = 1e-4;
    int early_stop_patience = 5;
    LossWeights loss;
    std::uint64_t seed = 42;
    bool augment_train = true;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0;
    double train_acc = 0;
    double val_loss = 0;
    double val_acc = 0;
    double lr = 0;  // rate used during this epoch
};

struct TrainResult {
    std::vector<EpochStats> history;
    bool early_stopped = false;
    std::vector<double> class_weights;
};

/// Per-epoch: seeded shuffle -> batches -> forward -> composite loss ->
/// backward -> clip -> AdamW; then a validation pass, the plateau scheduler
/// and early stopping on the validation loss. `log` (optional) receives one
/// line per epoch.
TrainResult train(Model<float>& model, const Dataset& dataset, const TrainConfig& config,
                  std::ostream* log = nullptr);

struct EvalResult {
    double loss = 0;
    double accuracy = 0;
    std::vector<int> predictions;
    std::vector<int> labels;
};

/// Eval-mode forward over one split, batched.
EvalResult evaluate(Model<float>& model, const Dataset& dataset, Split split,
                    const std::vector<double>& class_weights, const LossWeights& loss_weights,
                    int batch_size);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace hqcm
