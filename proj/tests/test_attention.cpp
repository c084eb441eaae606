#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hqcm/attention.hpp"
#include "hqcm/rng.hpp"
#include "support/finite_diff.hpp"

using namespace hqcm;
using namespace hqcm::nn;
using testsupport::central_diff;
using testsupport::rel_err;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Pcg32& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Step-by-step composition of the published equations in f64, built on the
// oracle conv below rather than the layer stack.
Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                           int padding) {
    const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Cout = w.dim(0), k = w.dim(2);
    Tensor<double> y({B, Cout, H + 2 * padding - k + 1, W + 2 * padding - k + 1});
    for (int bb = 0; bb < B; ++bb)
        for (int oc = 0; oc < Cout; ++oc)
            for (int oh = 0; oh < y.dim(2); ++oh)
                for (int ow = 0; ow < y.dim(3); ++ow) {
                    double acc = b[oc];
                    for (int ic = 0; ic < Cin; ++ic)
                        for (int kh = 0; kh < k; ++kh)
                            for (int kw = 0; kw < k; ++kw) {
                                const int ih = oh - padding + kh, iw = ow - padding + kw;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                acc += w.at(oc, ic, kh, kw) * x.at(bb, ic, ih, iw);
                            }
                    y.at(bb, oc, oh, ow) = acc;
                }
    return y;
}

}  // namespace

TEST_CASE("channel attention: zero weights give T_c = 0.5 and halve the features") {
    ChannelAttention<double> ca(4, 2);
    Pcg32 rng(1, 0);
    auto f = random_tensor({2, 4, 3, 3}, rng);
    auto [gated, tc] = ca.forward(f);
    for (double v : tc.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    for (std::size_t i = 0; i < f.data.size(); ++i)
        CHECK(gated.data[i] == doctest::Approx(0.5 * f.data[i]).epsilon(1e-15));
}

TEST_CASE("channel attention: zero features stay zero under zero biases") {
    ChannelAttention<double> ca(4, 2);
    Pcg32 rng(2, 0);
    ca.init(rng);
    ca.reduce.bias.fill(0);
    ca.expand.bias.fill(0);
    Tensor<double> f({1, 4, 2, 2});
    auto [gated, tc] = ca.forward(f);
    for (double v : gated.data) CHECK(v == 0.0);
}

TEST_CASE("channel attention: ratio must divide the channel count") {
    CHECK_THROWS_AS(ChannelAttention<double>(4, 3), std::invalid_argument);
}

TEST_CASE("channel attention matches a definitional composition oracle") {
    Pcg32 rng(3, 0);
    ChannelAttention<double> ca(4, 2);
    ca.init(rng);
    for (auto& b : ca.reduce.bias.data) b = rng.uniform(-0.5, 0.5);
    for (auto& b : ca.expand.bias.data) b = rng.uniform(-0.5, 0.5);
    auto f = random_tensor({2, 4, 3, 3}, rng);
    auto [gated, tc] = ca.forward(f);

    for (int b = 0; b < 2; ++b) {
        // c_avg -> 1x1 reduce -> relu -> 1x1 expand -> sigmoid
        std::vector<double> cavg(4, 0);
        for (int c = 0; c < 4; ++c) {
            for (int h = 0; h < 3; ++h)
                for (int w = 0; w < 3; ++w) cavg[static_cast<std::size_t>(c)] += f.at(b, c, h, w);
            cavg[static_cast<std::size_t>(c)] /= 9.0;
        }
        std::vector<double> hidden(2, 0);
        for (int o = 0; o < 2; ++o) {
            double acc = ca.reduce.bias[o];
            for (int c = 0; c < 4; ++c) acc += ca.reduce.weight.at(o, c, 0, 0) * cavg[static_cast<std::size_t>(c)];
            hidden[static_cast<std::size_t>(o)] = std::max(0.0, acc);
        }
        for (int c = 0; c < 4; ++c) {
            double acc = ca.expand.bias[c];
            for (int o = 0; o < 2; ++o) acc += ca.expand.weight.at(c, o, 0, 0) * hidden[static_cast<std::size_t>(o)];
            const double expect = sig(acc);
            CHECK(rel_err(tc.at(b, c), expect) < 1e-12);
            for (int h = 0; h < 3; ++h)
                for (int w = 0; w < 3; ++w)
                    CHECK(rel_err(gated.at(b, c, h, w), f.at(b, c, h, w) * expect) < 1e-12);
        }
    }
}

TEST_CASE("spatial attention: zero weights give T_s = 0.5 and F_final = 1.5 F") {
    SpatialAttention<double> sa(3);
    Pcg32 rng(4, 0);
    auto f = random_tensor({2, 3, 4, 4}, rng);
    auto fc = random_tensor({2, 3, 4, 4}, rng);
    auto [final, ts] = sa.forward(fc, f);
    for (double v : ts.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    for (std::size_t i = 0; i < f.data.size(); ++i)
        CHECK(final.data[i] == doctest::Approx(1.5 * f.data[i]).epsilon(1e-12));
}

TEST_CASE("spatial attention: F = 0 forces F_final = 0") {
    SpatialAttention<double> sa(3);
    Pcg32 rng(5, 0);
    sa.init(rng);
    Tensor<double> f({1, 3, 4, 4});
    auto fc = random_tensor({1, 3, 4, 4}, rng);
    auto [final, ts] = sa.forward(fc, f);
    for (double v : final.data) CHECK(v == 0.0);
}

TEST_CASE("spatial attention: shape mismatch rejected") {
    SpatialAttention<double> sa(3);
    Tensor<double> f({1, 3, 4, 4});
    Tensor<double> fc({1, 3, 2, 2});
    CHECK_THROWS_AS(sa.forward(fc, f), std::invalid_argument);
}

TEST_CASE("spatial attention matches a definitional composition oracle") {
    Pcg32 rng(6, 0);
    SpatialAttention<double> sa(2);
    sa.init(rng);
    auto f = random_tensor({1, 2, 4, 4}, rng);
    auto fc = random_tensor({1, 2, 4, 4}, rng);
    auto [final, ts] = sa.forward(fc, f);

    auto s1 = conv_oracle(fc, sa.conv1.weight, sa.conv1.bias, 0);
    auto s3 = conv_oracle(fc, sa.conv3.weight, sa.conv3.bias, 1);
    auto s5 = conv_oracle(fc, sa.conv5.weight, sa.conv5.bias, 2);
    Tensor<double> savg({1, 1, 4, 4});
    for (std::size_t i = 0; i < savg.data.size(); ++i)
        savg.data[i] = (s1.data[i] + s3.data[i] + s5.data[i]) / 3.0;
    auto fused = conv_oracle(savg, sa.fuse7.weight, sa.fuse7.bias, 3);
    for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 4; ++w) {
            const double expect_ts = sig(fused.at(0, 0, h, w));
            CHECK(rel_err(ts.at(0, 0, h, w), expect_ts) < 1e-12);
            for (int c = 0; c < 2; ++c)
                CHECK(rel_err(final.at(0, c, h, w), f.at(0, c, h, w) * (1.0 + expect_ts)) < 1e-12);
        }
}

TEST_CASE("dual attention invariants") {
    Pcg32 rng(7, 0);
    DualAttention<double> attn(4, 2);
    attn.init(rng);
    auto f = random_tensor({2, 4, 4, 4}, rng);
    auto [final, ts] = attn.forward(f);

    SUBCASE("maps stay strictly inside (0,1)") {
        for (double v : ts.data) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
    SUBCASE("residual form uses the original features exactly") {
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 4; ++c)
                for (int h = 0; h < 4; ++h)
                    for (int w = 0; w < 4; ++w)
                        CHECK(final.at(b, c, h, w) == f.at(b, c, h, w) * (1.0 + ts.at(b, 0, h, w)));
    }
    SUBCASE("sign is preserved and the multiplier stays in (1,2)") {
        for (std::size_t i = 0; i < f.data.size(); ++i) {
            if (f.data[i] > 0) CHECK(final.data[i] > f.data[i]);
            if (f.data[i] < 0) CHECK(final.data[i] < f.data[i]);
            if (f.data[i] != 0.0) {
                const double mult = final.data[i] / f.data[i];
                CHECK(mult > 1.0);
                CHECK(mult < 2.0);
            }
        }
    }
}

TEST_CASE("dual attention gradients match finite differences") {
    Pcg32 rng(8, 0);
    DualAttention<double> attn(2, 2);
    attn.init(rng);
    auto f = random_tensor({1, 2, 4, 4}, rng);
    auto up_final = random_tensor({1, 2, 4, 4}, rng);
    auto up_ts = random_tensor({1, 1, 4, 4}, rng);

    auto loss = [&]() {
        auto [final, ts] = attn.forward(f);
        double s = 0;
        for (std::size_t i = 0; i < final.data.size(); ++i) s += final.data[i] * up_final.data[i];
        for (std::size_t i = 0; i < ts.data.size(); ++i) s += ts.data[i] * up_ts.data[i];
        return s;
    };

    attn.forward(f);
    auto gf = attn.backward(up_final, up_ts);
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        const double fd = central_diff(loss, &f.data[i]);
        CHECK(rel_err(gf.data[i], fd) < 1e-4);
    }

    // every parameter of the block
    std::vector<std::pair<Tensor<double>*, Tensor<double>*>> params = {
        {&attn.channel.reduce.weight, &attn.channel.reduce.grad_weight},
        {&attn.channel.reduce.bias, &attn.channel.reduce.grad_bias},
        {&attn.channel.expand.weight, &attn.channel.expand.grad_weight},
        {&attn.channel.expand.bias, &attn.channel.expand.grad_bias},
        {&attn.spatial.conv1.weight, &attn.spatial.conv1.grad_weight},
        {&attn.spatial.conv1.bias, &attn.spatial.conv1.grad_bias},
        {&attn.spatial.conv3.weight, &attn.spatial.conv3.grad_weight},
        {&attn.spatial.conv5.weight, &attn.spatial.conv5.grad_weight},
        {&attn.spatial.fuse7.weight, &attn.spatial.fuse7.grad_weight},
        {&attn.spatial.fuse7.bias, &attn.spatial.fuse7.grad_bias},
    };
    for (auto [value, grad] : params) {
        Tensor<double> analytic = *grad;  // captured before FD perturbs state
        for (std::size_t i = 0; i < value->data.size(); ++i) {
            const double fd = central_diff(loss, &value->data[i]);
            CHECK(rel_err(analytic.data[i], fd) < 1e-4);
        }
    }
}
