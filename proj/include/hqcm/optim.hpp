#pragma once

#include <vector>

#include "hqcm/model.hpp"
#include "hqcm/tensor.hpp"

namespace hqcm {

struct AdamWConfig {
    double lr = 0.011;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// AdamW with decoupled weight decay: the decay shrinks the parameter
/// directly and never enters the moment estimates, so wd = 0 reduces to
/// plain Adam. Moments are kept in f64 regardless of the parameter dtype.
template <typename T>
class AdamW {
public:
    explicit AdamW(AdamWConfig config = {}) : config_(config) {}

    void step(std::vector<ParamRef<T>>& params);

    double lr() const { return config_.lr; }
    void set_lr(double lr) { config_.lr = lr; }
    long step_count() const { return step_; }
    const AdamWConfig& config() const { return config_; }

private:
    AdamWConfig config_;
    long step_ = 0;
    std::vector<std::vector<double>> m_, v_;  // per registered parameter
};

/// Global-norm gradient clipping: if ||g||_2 > max_norm, scale every
/// gradient by max_norm / ||g||. Returns the pre-clip norm.
template <typename T>
double clip_grad_norm(std::vector<ParamRef<T>>& params, double max_norm);

/// ReduceLROnPlateau: halve (by `factor`) after `patience` consecutive
/// epochs without the validation loss improving by more than `threshold`.
class PlateauScheduler {
public:
    PlateauScheduler(double factor = 0.5, int patience = 3, double threshold = 1e-4)
        : factor_(factor), patience_(patience), threshold_(threshold) {}

    /// Feed one validation loss per epoch; returns the multiplier to apply
    /// to the current learning rate (1.0 or `factor`).
    double step(double val_loss);

    int bad_epochs() const { return bad_epochs_; }

private:
    double factor_;
    int patience_;
    double threshold_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
};

}  // namespace hqcm
