#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hqcm/attention.hpp"
#include "hqcm/nn.hpp"
#include "hqcm/qsim.hpp"
#include "hqcm/tensor.hpp"

namespace hqcm {

struct QuantumLayerConfig {
    int qubits = 5;
    int depth = 2;
    int circuits = 5;

    int input_width() const { return circuits * (1 << qubits); }
    int output_width() const { return circuits * qubits; }
};

enum class Variant { hybrid, classical };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    int input_size = 128;  // H == W, divisible by 8
    int num_classes = 4;
    std::array<int, 3> conv_channels{128, 64, 32};
    int reduction_ratio = 8;
    QuantumLayerConfig quantum;
    Variant variant = Variant::hybrid;

    int feature_size() const { return input_size / 8; }
    int flatten_width() const { return conv_channels[2] * feature_size() * feature_size(); }
    void validate() const;
};

template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* tensor = nullptr;
    Tensor<T>* grad = nullptr;  // null for non-trainable state (BN running stats)
};

template <typename T>
struct ForwardResult {
    Tensor<T> logits;       // [B, K]
    Tensor<T> attention;    // [B, 1, H, W], upsampled T_s
    Tensor<T> ts;           // [B, 1, H/8, W/8]
    Tensor<T> quantum_out;  // [B, c*q]
    Tensor<T> pre_head;     // [B, c*2^q], the projection z feeding the circuits
    int degenerate_embeds = 0;
};

/// HQCM-EBTC: three conv blocks -> dual attention -> flatten -> projection ->
/// c parallel quantum circuits -> linear head. The classical variant swaps
/// the circuits for an interface-matched linear + tanh over the same
/// per-chunk normalized inputs the embedding would consume.
template <typename T>
class Model {
public:
    explicit Model(const ModelConfig& config);

    void init_params(std::uint64_t seed);
    void set_training(bool training);

    ForwardResult<T> forward(const Tensor<T>& images);
    /// grad_attention is on the upsampled map; pass an empty tensor when the
    /// attention loss is disabled. Returns the gradient wrt the input images.
    Tensor<T> backward(const Tensor<T>& grad_logits, const Tensor<T>& grad_attention);

    std::vector<ParamRef<T>> parameters();
    /// parameters plus BN running statistics, in checkpoint order.
    std::vector<ParamRef<T>> state_entries();
    std::int64_t param_count() const;

    const ModelConfig& config() const { return config_; }

    struct ConvBlock {
        nn::Conv2d<T> conv;
        nn::BatchNorm2d<T> bn;
        nn::Relu<T> relu;
        nn::MaxPool2<T> pool;
    };

    std::array<ConvBlock, 3> blocks;
    nn::DualAttention<T> attention;
    nn::Linear<T> projection;
    std::vector<Tensor<T>> circuit_angles;  // per circuit, [d, q, 3]
    std::vector<Tensor<T>> circuit_grads;
    nn::Linear<T> quantum_replacement;  // classical variant only
    nn::Linear<T> head;

private:
    qsim::CircuitParams circuit_params(int circuit) const;

    ModelConfig config_;
    Tensor<T> z_;      // cached projection output
    Tensor<T> znorm_;  // classical variant: per-chunk normalized z
    std::vector<T> chunk_norms_;
    Tensor<T> tanh_;  // cached tanh output (classical variant)
    bool has_forward_ = false;
};

using ModelF = Model<float>;
using ModelD = Model<double>;

/// The comparison baseline: same pipeline with the quantum layer replaced
/// by an interface-matched linear + tanh.
ModelConfig classical_counterpart(ModelConfig config);

// ----------------------------------------------------------- checkpoints
//
// Binary format: magic "HQCM", u32 version = 1, then named tensor records
// until EOF. Record: u32 name length, UTF-8 name, u8 dtype tag (0 = f32,
// 1 = f64), u32 rank, u32 dims..., little-endian payload. Model hyper-
// parameters ride along as f64 "config/..." records so a checkpoint is
// self-describing.

template <typename T>
void save_checkpoint(Model<T>& model, const std::string& path);

template <typename T>
Model<T> load_checkpoint(const std::string& path);

/// Strict load into an existing model: every state entry must be present
/// with a matching shape.
template <typename T>
void load_checkpoint_into(Model<T>& model, const std::string& path);

}  // namespace hqcm
