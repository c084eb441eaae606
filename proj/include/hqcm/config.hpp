#pragma once

#include <cstdint>
#include <string>

#include "hqcm/model.hpp"
#include "hqcm/train.hpp"

namespace hqcm {

/// Flat `key = value` run configuration. Defaults are the published
/// training configuration; unknown keys are rejected.
struct RunConfig {
    // optimizer / schedule
    double learning_rate = 0.011;
    double weight_decay = 1e-4;
    double clip_max_norm = 1.0;
    double lr_factor = 0.5;
    int lr_patience = 3;
    double lr_threshold = 1e-4;
    int early_stop_patience = 5;
    int max_epochs = 40;
    int batch_size = 64;

    // quantum layer
    int qubits_per_circuit = 5;
    int circuit_depth = 2;
    int parallel_circuits = 5;

    // loss weights
    double alpha = 1.0;
    double beta = 1.0;
    double zeta = 0.3;   // BCE share
    double gamma = 0.7;  // Dice share
    double dice_eps = 1e-6;

    // model / data
    int image_size = 128;
    int num_classes = 4;
    int reduction_ratio = 8;
    std::string variant = "hybrid";
    bool augment = true;
    std::uint64_t seed = 42;

    /// Parses `path` on top of `base`, so callers can pre-seed defaults
    /// (e.g. the HQCM_SEED fallback) that the file may still override.
    static RunConfig from_file(const std::string& path, RunConfig base);
    static RunConfig from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    std::string to_string() const;

    ModelConfig model_config() const;
    TrainConfig train_config() const;
};

}  // namespace hqcm
