#pragma once

#include "hqcm/nn.hpp"

namespace hqcm::nn {

/// Channel gate: global average pool -> 1x1 conv (C -> C/r) -> ReLU ->
/// 1x1 conv (C/r -> C) -> sigmoid, applied multiplicatively per channel.
template <typename T>
struct ChannelAttention {
    Conv2d<T> reduce;
    Conv2d<T> expand;
    int ratio = 8;

    ChannelAttention() = default;
    ChannelAttention(int channels, int ratio);

    void init(Pcg32& rng);

    /// Returns (F_channel, T_c) with T_c of shape [B, C].
    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& f);
    /// grad_f_channel: upstream for the gated features; grad_tc may be empty.
    Tensor<T> backward(const Tensor<T>& grad_f_channel);

private:
    GlobalAvgPool<T> gap_;
    Relu<T> relu_;
    Sigmoid<T> sig_;
    Tensor<T> input_;
    Tensor<T> tc_;
};

/// Spatial gate: three parallel convs (1x1, 3x3, 5x5; each C -> 1) averaged,
/// fused by a 7x7 conv and a sigmoid. The map modulates the ORIGINAL
/// features residually: F_final = F * (1 + T_s).
template <typename T>
struct SpatialAttention {
    Conv2d<T> conv1;  // k=1
    Conv2d<T> conv3;  // k=3, pad 1
    Conv2d<T> conv5;  // k=5, pad 2
    Conv2d<T> fuse7;  // k=7, pad 3, 1 -> 1

    SpatialAttention() = default;
    explicit SpatialAttention(int channels);

    void init(Pcg32& rng);

    /// f_channel feeds the multi-scale convs, f is the residual base.
    /// Returns (F_final, T_s) with T_s of shape [B, 1, H', W'].
    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& f_channel, const Tensor<T>& f);
    /// Returns (grad_f_channel, grad_f). grad_ts is the extra upstream on
    /// T_s (the attention-consistency path); pass an empty tensor when the
    /// loss does not touch the map.
    std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& grad_f_final, const Tensor<T>& grad_ts);

private:
    Sigmoid<T> sig_;
    Tensor<T> f_;
    Tensor<T> ts_;
};

/// The full dual-attention block of the model: channel then spatial.
template <typename T>
struct DualAttention {
    ChannelAttention<T> channel;
    SpatialAttention<T> spatial;

    DualAttention() = default;
    DualAttention(int channels, int ratio)
        : channel(channels, ratio), spatial(channels) {}

    void init(Pcg32& rng) {
        channel.init(rng);
        spatial.init(rng);
    }

    /// Returns (F_final, T_s).
    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& f);
    Tensor<T> backward(const Tensor<T>& grad_f_final, const Tensor<T>& grad_ts);

private:
    Tensor<T> f_;
    Tensor<T> tc_;
};

}  // namespace hqcm::nn
