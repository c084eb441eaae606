#pragma once

#include <vector>

#include "hqcm/rng.hpp"
#include "hqcm/tensor.hpp"

namespace hqcm::nn {

/// 2D cross-correlation with bias. Weight layout [out_ch, in_ch, k, k],
/// input [B, in_ch, H, W]. forward() caches the input for backward().
template <typename T>
struct Conv2d {
    Tensor<T> weight;
    Tensor<T> bias;
    int stride = 1;
    int padding = 0;

    Tensor<T> grad_weight;
    Tensor<T> grad_bias;

    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int k, int stride = 1, int padding = 0);

    void init_he(Pcg32& rng);

    Tensor<T> forward(const Tensor<T>& x);
    /// Returns grad wrt input; fills grad_weight / grad_bias.
    Tensor<T> backward(const Tensor<T>& grad_out);

    int in_channels() const { return weight.dim(1); }
    int out_channels() const { return weight.dim(0); }
    int kernel() const { return weight.dim(2); }

private:
    Tensor<T> input_;
};

template <typename T>
struct BatchNorm2d {
    Tensor<T> gamma, beta;
    Tensor<T> running_mean, running_var;
    T eps = T(1e-5);
    T momentum = T(0.1);
    bool training = true;

    Tensor<T> grad_gamma, grad_beta;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);

    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

private:
    Tensor<T> xhat_;          // normalized input (train mode)
    std::vector<T> inv_std_;  // per channel
    std::vector<T> mean_;
    bool eval_pass_ = false;
};

template <typename T>
struct Relu {
    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

private:
    std::vector<unsigned char> mask_;  // x > 0
};

template <typename T>
struct Sigmoid {
    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

private:
    Tensor<T> output_;
};

/// Non-overlapping 2x2 max pooling; H and W must be even. Ties route the
/// gradient to the first maximum in row-major window order.
template <typename T>
struct MaxPool2 {
    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

private:
    std::vector<int> in_shape_;
    std::vector<std::int64_t> argmax_;
};

/// [B,C,H,W] -> [B,C]
template <typename T>
struct GlobalAvgPool {
    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

private:
    std::vector<int> in_shape_;
};

template <typename T>
struct Linear {
    Tensor<T> weight;  // [out, in]
    Tensor<T> bias;    // [out]

    Tensor<T> grad_weight;
    Tensor<T> grad_bias;

    Linear() = default;
    Linear(int in, int out);

    void init_he(Pcg32& rng);

    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

private:
    Tensor<T> input_;
};

// Stateless elementwise helpers (no caching), used by oracles and the CLI.
template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// Nearest-neighbour upsampling by integer factor s on [B,C,H,W].
template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int s);
/// Adjoint of upsample_nearest: sums gradients over each s x s block.
template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& grad_out, int s);
/// Upsample to an explicit (H, W); the scale must be a matching integer.
template <typename T>
Tensor<T> upsample_nearest_to(const Tensor<T>& x, int out_h, int out_w);

}  // namespace hqcm::nn
