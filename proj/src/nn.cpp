#include "hqcm/nn.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hqcm::nn {

namespace {

int conv_out_size(int in, int k, int stride, int padding) {
    return (in + 2 * padding - k) / stride + 1;
}

// Dot product with eight independent accumulators. Breaking the dependency
// chain lets the compiler vectorize without reassociation flags; the fixed
// summation order keeps results bit-identical across runs.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        s4 += a[i + 4] * b[i + 4];
        s5 += a[i + 5] * b[i + 5];
        s6 += a[i + 6] * b[i + 6];
        s7 += a[i + 7] * b[i + 7];
    }
    T tail = 0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_ch, int out_ch, int k, int stride, int padding)
    : weight({out_ch, in_ch, k, k}),
      bias({out_ch}),
      stride(stride),
      padding(padding),
      grad_weight({out_ch, in_ch, k, k}),
      grad_bias({out_ch}) {
    if (k % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd");
    if (stride < 1 || padding < 0) throw std::invalid_argument("conv2d: bad stride/padding");
}

template <typename T>
void Conv2d<T>::init_he(Pcg32& rng) {
    int fan_in = weight.dim(1) * weight.dim(2) * weight.dim(3);
    double sd = std::sqrt(2.0 / fan_in);
    for (auto& w : weight.data) w = static_cast<T>(rng.normal(0.0, sd));
    bias.fill(T(0));
}

namespace {

// Zero-padded copy of one sample's channels; the hot loops then run without
// bounds checks and vectorize over the width dimension.
template <typename T>
void pad_sample(const Tensor<T>& x, int b, int padding, std::vector<T>& out) {
    const int C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Hp = H + 2 * padding, Wp = W + 2 * padding;
    out.assign(static_cast<std::size_t>(C) * Hp * Wp, T(0));
    for (int c = 0; c < C; ++c)
        for (int h = 0; h < H; ++h) {
            const T* src = &x.data[((static_cast<std::size_t>(b) * C + c) * H + h) * W];
            T* dst = &out[(static_cast<std::size_t>(c) * Hp + h + padding) * Wp + padding];
            std::copy(src, src + W, dst);
        }
}

// col[(ic*k + kh)*k + kw][oh*Wo + ow] = xpad[ic][oh*stride + kh][ow*stride + kw]
template <typename T>
void im2col(const std::vector<T>& xpad, int Cin, int Hp, int Wp, int k, int stride, int Ho, int Wo,
            std::vector<T>& col) {
    const std::size_t n = static_cast<std::size_t>(Ho) * Wo;
    col.resize(static_cast<std::size_t>(Cin) * k * k * n);
    std::size_t j = 0;
    for (int ic = 0; ic < Cin; ++ic)
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw, ++j) {
                T* dst = &col[j * n];
                for (int oh = 0; oh < Ho; ++oh) {
                    const T* src = &xpad[(static_cast<std::size_t>(ic) * Hp + oh * stride + kh) * Wp + kw];
                    if (stride == 1) {
                        std::copy(src, src + Wo, dst);
                        dst += Wo;
                    } else {
                        for (int ow = 0; ow < Wo; ++ow) *dst++ = src[ow * stride];
                    }
                }
            }
}

// adjoint of im2col: scatter-add the column rows back into the padded image
template <typename T>
void col2im(const std::vector<T>& col, int Cin, int Hp, int Wp, int k, int stride, int Ho, int Wo,
            std::vector<T>& gxpad) {
    const std::size_t n = static_cast<std::size_t>(Ho) * Wo;
    std::size_t j = 0;
    for (int ic = 0; ic < Cin; ++ic)
        for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw, ++j) {
                const T* src = &col[j * n];
                for (int oh = 0; oh < Ho; ++oh) {
                    T* dst = &gxpad[(static_cast<std::size_t>(ic) * Hp + oh * stride + kh) * Wp + kw];
                    if (stride == 1) {
                        for (int ow = 0; ow < Wo; ++ow) dst[ow] += src[ow];
                    } else {
                        for (int ow = 0; ow < Wo; ++ow) dst[ow * stride] += src[ow];
                    }
                    src += Wo;
                }
            }
}

}  // namespace

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 4)
        throw std::invalid_argument("conv2d: expected 4-d input, got " + shape_str(x.shape));
    if (x.dim(1) != in_channels())
        throw std::invalid_argument("conv2d: input has " + std::to_string(x.dim(1)) +
                                    " channels, layer expects " + std::to_string(in_channels()));
    const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int k = kernel(), Cout = out_channels();
    const int Ho = conv_out_size(H, k, stride, padding);
    const int Wo = conv_out_size(W, k, stride, padding);
    if (Ho < 1 || Wo < 1)
        throw std::invalid_argument("conv2d: input " + shape_str(x.shape) +
                                    " too small for kernel " + std::to_string(k));

    input_ = x;
    Tensor<T> y({B, Cout, Ho, Wo});
    const int Hp = H + 2 * padding, Wp = W + 2 * padding;
    const std::size_t n = static_cast<std::size_t>(Ho) * Wo;
    const std::size_t patch = static_cast<std::size_t>(Cin) * k * k;

#pragma omp parallel
    {
        std::vector<T> xpad, col;
#pragma omp for schedule(static)
        for (int b = 0; b < B; ++b) {
            pad_sample(x, b, padding, xpad);
            im2col(xpad, Cin, Hp, Wp, k, stride, Ho, Wo, col);
            for (int oc = 0; oc < Cout; ++oc) {
                T* yplane = &y.data[(static_cast<std::size_t>(b) * Cout + oc) * n];
                std::fill(yplane, yplane + n, bias[oc]);
                const T* wrow = &weight.data[static_cast<std::size_t>(oc) * patch];
                for (std::size_t j = 0; j < patch; ++j) {
                    const T wv = wrow[j];
                    const T* crow = &col[j * n];
                    for (std::size_t i = 0; i < n; ++i) yplane[i] += wv * crow[i];
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
    if (input_.numel() == 0) throw std::logic_error("conv2d: backward before forward");
    const Tensor<T>& x = input_;
    const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int k = kernel(), Cout = out_channels();
    const int Ho = grad_out.dim(2), Wo = grad_out.dim(3);
    const int Hp = H + 2 * padding, Wp = W + 2 * padding;

    grad_weight.fill(T(0));
    grad_bias.fill(T(0));
    Tensor<T> gx({B, Cin, H, W});
    const std::size_t n = static_cast<std::size_t>(Ho) * Wo;
    const std::size_t patch = static_cast<std::size_t>(Cin) * k * k;

    int num_threads = 1;
#ifdef _OPENMP
    num_threads = omp_get_max_threads();
#endif
    // per-thread parameter-gradient buffers, reduced in thread order below
    // so the result does not depend on scheduling
    std::vector<std::vector<T>> gw_acc(static_cast<std::size_t>(num_threads),
                                       std::vector<T>(grad_weight.data.size(), T(0)));
    std::vector<std::vector<T>> gb_acc(static_cast<std::size_t>(num_threads),
                                       std::vector<T>(grad_bias.data.size(), T(0)));

#pragma omp parallel
    {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        std::vector<T>& gw = gw_acc[static_cast<std::size_t>(tid)];
        std::vector<T>& gb = gb_acc[static_cast<std::size_t>(tid)];
        std::vector<T> xpad, col, gcol, gxpad;
#pragma omp for schedule(static)
        for (int b = 0; b < B; ++b) {
            pad_sample(x, b, padding, xpad);
            im2col(xpad, Cin, Hp, Wp, k, stride, Ho, Wo, col);
            gcol.assign(patch * n, T(0));
            const T* gbase = &grad_out.data[static_cast<std::size_t>(b) * Cout * n];
            for (int oc = 0; oc < Cout; ++oc) {
                double bsum = 0;
                for (std::size_t i = 0; i < n; ++i) bsum += static_cast<double>(gbase[oc * n + i]);
                gb[static_cast<std::size_t>(oc)] += static_cast<T>(bsum);
            }
            // j-major so the col/gcol rows stay cache-resident while the
            // output channels stream past
            for (std::size_t j = 0; j < patch; ++j) {
                const T* crow = &col[j * n];
                T* gcrow = &gcol[j * n];
                for (int oc = 0; oc < Cout; ++oc) {
                    const T* gplane = gbase + static_cast<std::size_t>(oc) * n;
                    const T wv = weight.data[static_cast<std::size_t>(oc) * patch + j];
                    gw[static_cast<std::size_t>(oc) * patch + j] += dot(gplane, crow, n);
                    for (std::size_t i = 0; i < n; ++i) gcrow[i] += gplane[i] * wv;
                }
            }
            gxpad.assign(static_cast<std::size_t>(Cin) * Hp * Wp, T(0));
            col2im(gcol, Cin, Hp, Wp, k, stride, Ho, Wo, gxpad);
            for (int ic = 0; ic < Cin; ++ic)
                for (int h = 0; h < H; ++h) {
                    const T* src = &gxpad[(static_cast<std::size_t>(ic) * Hp + h + padding) * Wp + padding];
                    T* dst = &gx.data[((static_cast<std::size_t>(b) * Cin + ic) * H + h) * W];
                    std::copy(src, src + W, dst);
                }
        }
    }

    for (int t = 0; t < num_threads; ++t) {
        for (std::size_t i = 0; i < grad_weight.data.size(); ++i)
            grad_weight.data[i] += gw_acc[static_cast<std::size_t>(t)][i];
        for (std::size_t i = 0; i < grad_bias.data.size(); ++i)
            grad_bias.data[i] += gb_acc[static_cast<std::size_t>(t)][i];
    }
    return gx;
}

// ------------------------------------------------------------ BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels)
    : gamma(Tensor<T>::full({channels}, T(1))),
      beta({channels}),
      running_mean({channels}),
      running_var(Tensor<T>::full({channels}, T(1))),
      grad_gamma({channels}),
      grad_beta({channels}) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 4) throw std::invalid_argument("batchnorm: expected 4-d input");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (C != gamma.dim(0)) throw std::invalid_argument("batchnorm: channel mismatch");

    Tensor<T> y({B, C, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    auto xplane = [&](int b, int c) { return &x.data[(static_cast<std::size_t>(b) * C + c) * plane]; };
    auto yplane = [&](int b, int c) { return &y.data[(static_cast<std::size_t>(b) * C + c) * plane]; };

    if (!training) {
        eval_pass_ = true;
        inv_std_.assign(C, T(0));
        for (int c = 0; c < C; ++c) inv_std_[c] = T(1) / std::sqrt(running_var[c] + eps);
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
                const T scale = inv_std_[c] * gamma[c];
                const T shift = beta[c] - running_mean[c] * scale;
                const T* xs = xplane(b, c);
                T* ys = yplane(b, c);
                for (std::size_t i = 0; i < plane; ++i) ys[i] = xs[i] * scale + shift;
            }
        return y;
    }

    if (B < 2) throw std::invalid_argument("batchnorm: train mode needs batch size >= 2");

    eval_pass_ = false;
    mean_.assign(C, T(0));
    inv_std_.assign(C, T(0));
    xhat_ = Tensor<T>({B, C, H, W});

    const double n = static_cast<double>(B) * static_cast<double>(plane);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        // f64 accumulation: channel sums span up to B*H*W elements
        double sum = 0.0;
        for (int b = 0; b < B; ++b) {
            const T* xs = xplane(b, c);
            for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(xs[i]);
        }
        const double mu = sum / n;
        double var = 0.0;
        for (int b = 0; b < B; ++b) {
            const T* xs = xplane(b, c);
            for (std::size_t i = 0; i < plane; ++i) {
                const double d = static_cast<double>(xs[i]) - mu;
                var += d * d;
            }
        }
        var /= n;

        mean_[c] = static_cast<T>(mu);
        inv_std_[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));

        running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * static_cast<T>(mu);
        running_var[c] = (T(1) - momentum) * running_var[c] + momentum * static_cast<T>(var);

        const T m = mean_[c], istd = inv_std_[c], g = gamma[c], bt = beta[c];
        for (int b = 0; b < B; ++b) {
            const T* xs = xplane(b, c);
            T* hs = &xhat_.data[(static_cast<std::size_t>(b) * C + c) * plane];
            T* ys = yplane(b, c);
            for (std::size_t i = 0; i < plane; ++i) {
                const T xh = (xs[i] - m) * istd;
                hs[i] = xh;
                ys[i] = g * xh + bt;
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
    const int B = grad_out.dim(0), C = grad_out.dim(1), H = grad_out.dim(2), W = grad_out.dim(3);
    Tensor<T> gx({B, C, H, W});
    grad_gamma.fill(T(0));
    grad_beta.fill(T(0));
    const std::size_t plane = static_cast<std::size_t>(H) * W;

    if (eval_pass_) {
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
                const T s = gamma[c] * inv_std_[c];
                const T* gs = &grad_out.data[(static_cast<std::size_t>(b) * C + c) * plane];
                T* os = &gx.data[(static_cast<std::size_t>(b) * C + c) * plane];
                for (std::size_t i = 0; i < plane; ++i) os[i] = gs[i] * s;
            }
        return gx;
    }

    if (xhat_.numel() == 0) throw std::logic_error("batchnorm: backward before forward");
    const double n = static_cast<double>(B) * static_cast<double>(plane);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int b = 0; b < B; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
            const T* gs = &grad_out.data[off];
            const T* hs = &xhat_.data[off];
            for (std::size_t i = 0; i < plane; ++i) {
                sum_g += static_cast<double>(gs[i]);
                sum_gx += static_cast<double>(gs[i]) * static_cast<double>(hs[i]);
            }
        }
        grad_beta[c] = static_cast<T>(sum_g);
        grad_gamma[c] = static_cast<T>(sum_gx);

        const T a = static_cast<T>(static_cast<double>(gamma[c]) * static_cast<double>(inv_std_[c]));
        const T mg = static_cast<T>(sum_g / n);
        const T mgx = static_cast<T>(sum_gx / n);
        for (int b = 0; b < B; ++b) {
            const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
            const T* gs = &grad_out.data[off];
            const T* hs = &xhat_.data[off];
            T* os = &gx.data[off];
            for (std::size_t i = 0; i < plane; ++i) os[i] = a * (gs[i] - mg - hs[i] * mgx);
        }
    }
    return gx;
}

// ------------------------------------------------------------------ Relu

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    mask_.resize(x.data.size());
    const std::int64_t n = static_cast<std::int64_t>(x.data.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const bool pos = x.data[static_cast<std::size_t>(i)] > T(0);
        mask_[static_cast<std::size_t>(i)] = pos;
        y.data[static_cast<std::size_t>(i)] = pos ? x.data[static_cast<std::size_t>(i)] : T(0);
    }
    return y;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> gx(grad_out.shape);
    // subgradient at 0 is 0
    for (std::size_t i = 0; i < grad_out.data.size(); ++i)
        gx.data[i] = mask_[i] ? grad_out.data[i] : T(0);
    return gx;
}

// --------------------------------------------------------------- Sigmoid

template <typename T>
Tensor<T> Sigmoid<T>::forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        y.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
    output_ = y;
    return y;
}

template <typename T>
Tensor<T> Sigmoid<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> gx(grad_out.shape);
    for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
        T y = output_.data[i];
        gx.data[i] = grad_out.data[i] * y * (T(1) - y);
    }
    return gx;
}

// -------------------------------------------------------------- MaxPool2

template <typename T>
Tensor<T> MaxPool2<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 4) throw std::invalid_argument("maxpool2: expected 4-d input");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0)
        throw std::invalid_argument("maxpool2: spatial dims must be even, got " + shape_str(x.shape));

    in_shape_ = x.shape;
    Tensor<T> y({B, C, H / 2, W / 2});
    argmax_.assign(static_cast<std::size_t>(y.numel()), 0);

    std::size_t oidx = 0;
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const std::size_t base = (static_cast<std::size_t>(b) * C + c) * H * W;
            for (int oh = 0; oh < H / 2; ++oh) {
                const T* row0 = &x.data[base + static_cast<std::size_t>(2 * oh) * W];
                const T* row1 = row0 + W;
                for (int ow = 0; ow < W / 2; ++ow, ++oidx) {
                    // strict comparisons: first occurrence in row-major
                    // window order wins ties
                    T best = row0[2 * ow];
                    int pick = 0;
                    if (row0[2 * ow + 1] > best) { best = row0[2 * ow + 1]; pick = 1; }
                    if (row1[2 * ow] > best) { best = row1[2 * ow]; pick = 2; }
                    if (row1[2 * ow + 1] > best) { best = row1[2 * ow + 1]; pick = 3; }
                    y.data[oidx] = best;
                    argmax_[oidx] = static_cast<std::int64_t>(base) +
                                    (2 * oh + pick / 2) * static_cast<std::int64_t>(W) + 2 * ow + pick % 2;
                }
            }
        }
    return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::backward(const Tensor<T>& grad_out) {
    if (in_shape_.empty()) throw std::logic_error("maxpool2: backward before forward");
    Tensor<T> gx(in_shape_);
    for (std::size_t i = 0; i < grad_out.data.size(); ++i)
        gx.data[static_cast<std::size_t>(argmax_[i])] += grad_out.data[i];
    return gx;
}

// --------------------------------------------------------- GlobalAvgPool

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 4) throw std::invalid_argument("global_avg_pool: expected 4-d input");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    in_shape_ = x.shape;
    Tensor<T> y({B, C});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            double acc = 0.0;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) acc += static_cast<double>(x.at(b, c, h, w));
            y.at(b, c) = static_cast<T>(acc / (static_cast<double>(H) * W));
        }
    return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_out) {
    if (in_shape_.empty()) throw std::logic_error("global_avg_pool: backward before forward");
    const int B = in_shape_[0], C = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
    Tensor<T> gx(in_shape_);
    const T scale = T(1) / static_cast<T>(H * W);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
            const T g = grad_out.at(b, c) * scale;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) gx.at(b, c, h, w) = g;
        }
    return gx;
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(int in, int out)
    : weight({out, in}), bias({out}), grad_weight({out, in}), grad_bias({out}) {}

template <typename T>
void Linear<T>::init_he(Pcg32& rng) {
    int fan_in = weight.dim(1);
    double sd = std::sqrt(2.0 / fan_in);
    for (auto& w : weight.data) w = static_cast<T>(rng.normal(0.0, sd));
    bias.fill(T(0));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 2 || x.dim(1) != weight.dim(1))
        throw std::invalid_argument("linear: input " + shape_str(x.shape) + " incompatible with weight " +
                                    shape_str(weight.shape));
    const int B = x.dim(0), In = weight.dim(1), Out = weight.dim(0);
    input_ = x;
    Tensor<T> y({B, Out});
    for (int b = 0; b < B; ++b) {
        const T* xr = &x.data[static_cast<std::size_t>(b) * In];
        for (int o = 0; o < Out; ++o)
            y.at(b, o) = bias[o] + dot(&weight.data[static_cast<std::size_t>(o) * In], xr,
                                       static_cast<std::size_t>(In));
    }
    return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
    if (input_.numel() == 0) throw std::logic_error("linear: backward before forward");
    const int B = input_.dim(0), In = weight.dim(1), Out = weight.dim(0);
    grad_weight.fill(T(0));
    grad_bias.fill(T(0));
    Tensor<T> gx({B, In});
    for (int b = 0; b < B; ++b) {
        const T* xr = &input_.data[static_cast<std::size_t>(b) * In];
        T* gxr = &gx.data[static_cast<std::size_t>(b) * In];
        for (int o = 0; o < Out; ++o) {
            const T g = grad_out.at(b, o);
            grad_bias[o] += g;
            const T* wr = &weight.data[static_cast<std::size_t>(o) * In];
            T* gwr = &grad_weight.data[static_cast<std::size_t>(o) * In];
            for (int i = 0; i < In; ++i) {
                gwr[i] += g * xr[i];
                gxr[i] += g * wr[i];
            }
        }
    }
    return gx;
}

// ------------------------------------------------------- free functions

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
    return y;
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int s) {
    if (x.rank() != 4) throw std::invalid_argument("upsample: expected 4-d input");
    if (s < 1) throw std::invalid_argument("upsample: scale must be >= 1");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor<T> y({B, C, H * s, W * s});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H * s; ++h)
                for (int w = 0; w < W * s; ++w) y.at(b, c, h, w) = x.at(b, c, h / s, w / s);
    return y;
}

template <typename T>
Tensor<T> upsample_nearest_to(const Tensor<T>& x, int out_h, int out_w) {
    const int H = x.dim(2), W = x.dim(3);
    if (out_h % H != 0 || out_w % W != 0 || out_h / H != out_w / W)
        throw std::invalid_argument("upsample: target " + std::to_string(out_h) + "x" +
                                    std::to_string(out_w) + " is not an integer multiple of " +
                                    std::to_string(H) + "x" + std::to_string(W));
    return upsample_nearest(x, out_h / H);
}

template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& grad_out, int s) {
    const int B = grad_out.dim(0), C = grad_out.dim(1), Hs = grad_out.dim(2), Ws = grad_out.dim(3);
    if (Hs % s != 0 || Ws % s != 0)
        throw std::invalid_argument("upsample backward: shape not divisible by scale");
    Tensor<T> gx({B, C, Hs / s, Ws / s});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < Hs; ++h)
                for (int w = 0; w < Ws; ++w) gx.at(b, c, h / s, w / s) += grad_out.at(b, c, h, w);
    return gx;
}

// explicit instantiations
template struct Conv2d<float>;
template struct Conv2d<double>;
template struct BatchNorm2d<float>;
template struct BatchNorm2d<double>;
template struct Relu<float>;
template struct Relu<double>;
template struct Sigmoid<float>;
template struct Sigmoid<double>;
template struct MaxPool2<float>;
template struct MaxPool2<double>;
template struct GlobalAvgPool<float>;
template struct GlobalAvgPool<double>;
template struct Linear<float>;
template struct Linear<double>;

template Tensor<float> relu(const Tensor<float>&);
template Tensor<double> relu(const Tensor<double>&);
template Tensor<float> sigmoid(const Tensor<float>&);
template Tensor<double> sigmoid(const Tensor<double>&);
template Tensor<float> upsample_nearest(const Tensor<float>&, int);
template Tensor<double> upsample_nearest(const Tensor<double>&, int);
template Tensor<float> upsample_nearest_backward(const Tensor<float>&, int);
template Tensor<double> upsample_nearest_backward(const Tensor<double>&, int);
template Tensor<float> upsample_nearest_to(const Tensor<float>&, int, int);
template Tensor<double> upsample_nearest_to(const Tensor<double>&, int, int);

}  // namespace hqcm::nn
