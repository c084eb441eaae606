#pragma once

#include <vector>

#include "hqcm/tensor.hpp"

namespace hqcm {

struct LossWeights {
    double alpha = 1.0;     // classification weight
    double beta = 1.0;      // attention-consistency weight
    double zeta = 0.3;      // BCE share inside the attention loss
    double gamma = 0.7;     // Dice share inside the attention loss
    double dice_eps = 1e-6;

    void validate() const {
        if (alpha < 0 || beta < 0 || zeta < 0 || gamma < 0 || dice_eps <= 0)
            throw std::invalid_argument("loss weights must be non-negative with dice_eps > 0");
    }
};

template <typename T>
struct ScalarLoss {
    double value = 0.0;
    Tensor<T> grad;
};

/// Softmax cross-entropy with per-class weights, mean over the batch.
/// Stable via max-subtracted log-sum-exp. grad is wrt the logits.
template <typename T>
ScalarLoss<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                            const std::vector<double>& class_weights);

/// Pixel BCE between an attention map in (0,1) and a binary mask, averaged
/// over every pixel of the batch. The map is clamped to [1e-7, 1-1e-7]
/// before the logs.
template <typename T>
ScalarLoss<T> bce_attention(const Tensor<T>& attention, const Tensor<T>& mask);

/// 1 - smoothed Dice overlap, per sample then averaged over the batch.
template <typename T>
ScalarLoss<T> dice_loss(const Tensor<T>& attention, const Tensor<T>& mask, double eps);

template <typename T>
struct TotalLoss {
    double total = 0.0;
    double classification = 0.0;
    double bce = 0.0;
    double dice = 0.0;
    Tensor<T> grad_logits;
    Tensor<T> grad_attention;
};

/// alpha * L_class + beta * (zeta * L_BCE + gamma * L_Dice).
template <typename T>
TotalLoss<T> total_loss(const Tensor<T>& logits, const std::vector<int>& labels,
                        const std::vector<double>& class_weights, const Tensor<T>& attention,
                        const Tensor<T>& mask, const LossWeights& weights);

/// Inverse-frequency class weights from label counts, normalized to mean 1.
std::vector<double> inverse_frequency_weights(const std::vector<int>& labels, int num_classes);

}  // namespace hqcm
