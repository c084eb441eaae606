#include "hqcm/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hqcm {

template <typename T>
ScalarLoss<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                            const std::vector<double>& class_weights) {
    if (logits.rank() != 2) throw std::invalid_argument("cross_entropy: logits must be [B,K]");
    const int B = logits.dim(0), K = logits.dim(1);
    if (static_cast<int>(labels.size()) != B)
        throw std::invalid_argument("cross_entropy: label count does not match batch");
    if (static_cast<int>(class_weights.size()) != K)
        throw std::invalid_argument("cross_entropy: class weight count does not match K");
    for (int y : labels)
        if (y < 0 || y >= K)
            throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " out of range [0," +
                                        std::to_string(K) + ")");

    ScalarLoss<T> out;
    out.grad = Tensor<T>({B, K});
    double loss = 0;
    std::vector<double> p(static_cast<std::size_t>(K));
    for (int b = 0; b < B; ++b) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) mx = std::max(mx, static_cast<double>(logits.at(b, k)));
        double denom = 0;
        for (int k = 0; k < K; ++k) {
            p[static_cast<std::size_t>(k)] = std::exp(static_cast<double>(logits.at(b, k)) - mx);
            denom += p[static_cast<std::size_t>(k)];
        }
        const int y = labels[static_cast<std::size_t>(b)];
        const double w = class_weights[static_cast<std::size_t>(y)];
        const double log_py = (static_cast<double>(logits.at(b, y)) - mx) - std::log(denom);
        loss += -w * log_py;
        for (int k = 0; k < K; ++k) {
            const double soft = p[static_cast<std::size_t>(k)] / denom;
            out.grad.at(b, k) = static_cast<T>(w * (soft - (k == y ? 1.0 : 0.0)) / B);
        }
    }
    out.value = loss / B;
    return out;
}

template <typename T>
ScalarLoss<T> bce_attention(const Tensor<T>& attention, const Tensor<T>& mask) {
    if (!attention.same_shape(mask))
        throw std::invalid_argument("bce: attention " + shape_str(attention.shape) + " vs mask " +
                                    shape_str(mask.shape));
    const double lo = 1e-7, hi = 1.0 - 1e-7;
    const std::size_t n = attention.data.size();
    ScalarLoss<T> out;
    out.grad = Tensor<T>(attention.shape);
    double loss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::clamp(static_cast<double>(attention.data[i]), lo, hi);
        const double t = static_cast<double>(mask.data[i]);
        loss += -(t * std::log(a) + (1.0 - t) * std::log(1.0 - a));
        // clamp is inactive on sigmoid outputs in (lo, hi); the saturated
        // tails get the clamped-point gradient
        out.grad.data[i] = static_cast<T>((-(t / a) + (1.0 - t) / (1.0 - a)) / static_cast<double>(n));
    }
    out.value = loss / static_cast<double>(n);
    return out;
}

template <typename T>
ScalarLoss<T> dice_loss(const Tensor<T>& attention, const Tensor<T>& mask, double eps) {
    if (!attention.same_shape(mask))
        throw std::invalid_argument("dice: attention " + shape_str(attention.shape) + " vs mask " +
                                    shape_str(mask.shape));
    if (eps <= 0) throw std::invalid_argument("dice: eps must be positive");
    const int B = attention.dim(0);
    const std::size_t per = attention.data.size() / static_cast<std::size_t>(B);

    ScalarLoss<T> out;
    out.grad = Tensor<T>(attention.shape);
    double loss = 0;
    for (int b = 0; b < B; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * per;
        double inter = 0, sum_a = 0, sum_t = 0;
        for (std::size_t i = 0; i < per; ++i) {
            const double a = attention.data[base + i];
            const double t = mask.data[base + i];
            inter += t * a;
            sum_a += a;
            sum_t += t;
        }
        const double num = 2.0 * inter + eps;
        const double den = sum_t + sum_a + eps;
        loss += 1.0 - num / den;
        // d/da_i (1 - num/den) = -(2 t_i den - num) / den^2
        for (std::size_t i = 0; i < per; ++i) {
            const double t = mask.data[base + i];
            out.grad.data[base + i] =
                static_cast<T>(-(2.0 * t * den - num) / (den * den) / static_cast<double>(B));
        }
    }
    out.value = loss / B;
    return out;
}

template <typename T>
TotalLoss<T> total_loss(const Tensor<T>& logits, const std::vector<int>& labels,
                        const std::vector<double>& class_weights, const Tensor<T>& attention,
                        const Tensor<T>& mask, const LossWeights& weights) {
    weights.validate();
    TotalLoss<T> out;
    ScalarLoss<T> ce = cross_entropy(logits, labels, class_weights);
    ScalarLoss<T> bce = bce_attention(attention, mask);
    ScalarLoss<T> dice = dice_loss(attention, mask, weights.dice_eps);

    out.classification = ce.value;
    out.bce = bce.value;
    out.dice = dice.value;
    out.total = weights.alpha * ce.value + weights.beta * (weights.zeta * bce.value + weights.gamma * dice.value);

    out.grad_logits = std::move(ce.grad);
    for (auto& g : out.grad_logits.data) g = static_cast<T>(weights.alpha * g);
    out.grad_attention = Tensor<T>(attention.shape);
    for (std::size_t i = 0; i < attention.data.size(); ++i)
        out.grad_attention.data[i] = static_cast<T>(
            weights.beta * (weights.zeta * static_cast<double>(bce.grad.data[i]) +
                            weights.gamma * static_cast<double>(dice.grad.data[i])));
    return out;
}

std::vector<double> inverse_frequency_weights(const std::vector<int>& labels, int num_classes) {
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw std::invalid_argument("class weight: label out of range");
        counts[static_cast<std::size_t>(y)] += 1.0;
    }
    std::vector<double> w(static_cast<std::size_t>(num_classes), 0.0);
    const double n = static_cast<double>(labels.size());
    for (int k = 0; k < num_classes; ++k) {
        if (counts[static_cast<std::size_t>(k)] == 0)
            throw std::invalid_argument("class weight: class " + std::to_string(k) + " has no samples");
        w[static_cast<std::size_t>(k)] = n / (num_classes * counts[static_cast<std::size_t>(k)]);
    }
    double mean = 0;
    for (double v : w) mean += v;
    mean /= num_classes;
    for (double& v : w) v /= mean;
    return w;
}

template ScalarLoss<float> cross_entropy(const Tensor<float>&, const std::vector<int>&,
                                         const std::vector<double>&);
template ScalarLoss<double> cross_entropy(const Tensor<double>&, const std::vector<int>&,
                                          const std::vector<double>&);
template ScalarLoss<float> bce_attention(const Tensor<float>&, const Tensor<float>&);
template ScalarLoss<double> bce_attention(const Tensor<double>&, const Tensor<double>&);
template ScalarLoss<float> dice_loss(const Tensor<float>&, const Tensor<float>&, double);
template ScalarLoss<double> dice_loss(const Tensor<double>&, const Tensor<double>&, double);
template TotalLoss<float> total_loss(const Tensor<float>&, const std::vector<int>&,
                                     const std::vector<double>&, const Tensor<float>&,
                                     const Tensor<float>&, const LossWeights&);
template TotalLoss<double> total_loss(const Tensor<double>&, const std::vector<int>&,
                                      const std::vector<double>&, const Tensor<double>&,
                                      const Tensor<double>&, const LossWeights&);

}  // namespace hqcm
