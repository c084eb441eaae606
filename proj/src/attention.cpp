#include "hqcm/attention.hpp"

#include <stdexcept>

namespace hqcm::nn {

template <typename T>
ChannelAttention<T>::ChannelAttention(int channels, int ratio) : ratio(ratio) {
    if (ratio < 1 || channels % ratio != 0)
        throw std::invalid_argument("channel attention: channels (" + std::to_string(channels) +
                                    ") must be divisible by reduction ratio (" + std::to_string(ratio) + ")");
    reduce = Conv2d<T>(channels, channels / ratio, 1);
    expand = Conv2d<T>(channels / ratio, channels, 1);
}

template <typename T>
void ChannelAttention<T>::init(Pcg32& rng) {
    reduce.init_he(rng);
    expand.init_he(rng);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> ChannelAttention<T>::forward(const Tensor<T>& f) {
    input_ = f;
    const int B = f.dim(0), C = f.dim(1);

    Tensor<T> c_avg = gap_.forward(f).reshaped({B, C, 1, 1});
    Tensor<T> h = sig_.forward(expand.forward(relu_.forward(reduce.forward(c_avg))));
    tc_ = h.reshaped({B, C});

    Tensor<T> gated(f.shape);
    const int H = f.dim(2), W = f.dim(3);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const T t = tc_.at(b, c);
            for (int hh = 0; hh < H; ++hh)
                for (int ww = 0; ww < W; ++ww) gated.at(b, c, hh, ww) = f.at(b, c, hh, ww) * t;
        }
    return {std::move(gated), tc_};
}

template <typename T>
Tensor<T> ChannelAttention<T>::backward(const Tensor<T>& grad_f_channel) {
    if (input_.numel() == 0) throw std::logic_error("channel attention: backward before forward");
    const Tensor<T>& f = input_;
    const int B = f.dim(0), C = f.dim(1), H = f.dim(2), W = f.dim(3);

    Tensor<T> grad_f(f.shape);
    Tensor<T> grad_tc({B, C, 1, 1});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const T t = tc_.at(b, c);
            double acc = 0;
            for (int hh = 0; hh < H; ++hh)
                for (int ww = 0; ww < W; ++ww) {
                    const T g = grad_f_channel.at(b, c, hh, ww);
                    grad_f.at(b, c, hh, ww) = g * t;
                    acc += static_cast<double>(g) * static_cast<double>(f.at(b, c, hh, ww));
                }
            grad_tc.at(b, c, 0, 0) = static_cast<T>(acc);
        }

    Tensor<T> grad_cavg = reduce.backward(relu_.backward(expand.backward(sig_.backward(grad_tc))));
    Tensor<T> grad_pool = gap_.backward(grad_cavg.reshaped({B, C}));
    for (std::size_t i = 0; i < grad_f.data.size(); ++i) grad_f.data[i] += grad_pool.data[i];
    return grad_f;
}

template <typename T>
SpatialAttention<T>::SpatialAttention(int channels)
    : conv1(channels, 1, 1, 1, 0),
      conv3(channels, 1, 3, 1, 1),
      conv5(channels, 1, 5, 1, 2),
      fuse7(1, 1, 7, 1, 3) {}

template <typename T>
void SpatialAttention<T>::init(Pcg32& rng) {
    conv1.init_he(rng);
    conv3.init_he(rng);
    conv5.init_he(rng);
    fuse7.init_he(rng);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> SpatialAttention<T>::forward(const Tensor<T>& f_channel,
                                                             const Tensor<T>& f) {
    if (!f_channel.same_shape(f))
        throw std::invalid_argument("spatial attention: F_channel " + shape_str(f_channel.shape) +
                                    " and F " + shape_str(f.shape) + " must share shape");
    f_ = f;
    const int B = f.dim(0), C = f.dim(1), H = f.dim(2), W = f.dim(3);

    Tensor<T> s1 = conv1.forward(f_channel);
    Tensor<T> s3 = conv3.forward(f_channel);
    Tensor<T> s5 = conv5.forward(f_channel);
    Tensor<T> s_avg({B, 1, H, W});
    for (std::size_t i = 0; i < s_avg.data.size(); ++i)
        s_avg.data[i] = (s1.data[i] + s3.data[i] + s5.data[i]) / T(3);

    ts_ = sig_.forward(fuse7.forward(s_avg));

    Tensor<T> f_final(f.shape);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int hh = 0; hh < H; ++hh)
                for (int ww = 0; ww < W; ++ww)
                    f_final.at(b, c, hh, ww) = f.at(b, c, hh, ww) * (T(1) + ts_.at(b, 0, hh, ww));
    return {std::move(f_final), ts_};
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> SpatialAttention<T>::backward(const Tensor<T>& grad_f_final,
                                                              const Tensor<T>& grad_ts) {
    if (f_.numel() == 0) throw std::logic_error("spatial attention: backward before forward");
    const int B = f_.dim(0), C = f_.dim(1), H = f_.dim(2), W = f_.dim(3);

    Tensor<T> grad_f(f_.shape);
    Tensor<T> dts({B, 1, H, W});
    if (grad_ts.numel() != 0) dts = grad_ts;
    for (int b = 0; b < B; ++b)
        for (int hh = 0; hh < H; ++hh)
            for (int ww = 0; ww < W; ++ww) {
                const T t = T(1) + ts_.at(b, 0, hh, ww);
                double acc = 0;
                for (int c = 0; c < C; ++c) {
                    const T g = grad_f_final.at(b, c, hh, ww);
                    grad_f.at(b, c, hh, ww) = g * t;
                    acc += static_cast<double>(g) * static_cast<double>(f_.at(b, c, hh, ww));
                }
                dts.at(b, 0, hh, ww) += static_cast<T>(acc);
            }

    Tensor<T> ds_avg = fuse7.backward(sig_.backward(dts));
    for (auto& v : ds_avg.data) v /= T(3);
    Tensor<T> dfc = conv1.backward(ds_avg);
    Tensor<T> dfc3 = conv3.backward(ds_avg);
    Tensor<T> dfc5 = conv5.backward(ds_avg);
    for (std::size_t i = 0; i < dfc.data.size(); ++i) dfc.data[i] += dfc3.data[i] + dfc5.data[i];
    return {std::move(dfc), std::move(grad_f)};
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> DualAttention<T>::forward(const Tensor<T>& f) {
    f_ = f;
    auto [f_channel, tc] = channel.forward(f);
    tc_ = tc;
    return spatial.forward(f_channel, f);
}

template <typename T>
Tensor<T> DualAttention<T>::backward(const Tensor<T>& grad_f_final, const Tensor<T>& grad_ts) {
    auto [grad_f_channel, grad_f] = spatial.backward(grad_f_final, grad_ts);
    Tensor<T> grad_from_gate = channel.backward(grad_f_channel);
    for (std::size_t i = 0; i < grad_f.data.size(); ++i) grad_f.data[i] += grad_from_gate.data[i];
    return grad_f;
}

template struct ChannelAttention<float>;
template struct ChannelAttention<double>;
template struct SpatialAttention<float>;
template struct SpatialAttention<double>;
template struct DualAttention<float>;
template struct DualAttention<double>;

}  // namespace hqcm::nn
