#include "hqcm/model.hpp"

#include <cmath>
#include <stdexcept>

#include "hqcm/rng.hpp"

namespace hqcm {

std::string variant_name(Variant v) { return v == Variant::hybrid ? "hybrid" : "classical"; }

Variant variant_from_name(const std::string& name) {
    if (name == "hybrid") return Variant::hybrid;
    if (name == "classical") return Variant::classical;
    throw std::invalid_argument("unknown variant '" + name + "' (expected hybrid or classical)");
}

void ModelConfig::validate() const {
    if (input_size < 8 || input_size % 8 != 0)
        throw std::invalid_argument("model: input size " + std::to_string(input_size) +
                                    " must be a positive multiple of 8");
    if (num_classes < 2) throw std::invalid_argument("model: need at least 2 classes");
    for (int c : conv_channels)
        if (c < 1) throw std::invalid_argument("model: conv channels must be positive");
    if (conv_channels[2] % reduction_ratio != 0)
        throw std::invalid_argument("model: final channel count " + std::to_string(conv_channels[2]) +
                                    " not divisible by attention reduction ratio " +
                                    std::to_string(reduction_ratio));
    if (quantum.qubits < 1 || quantum.depth < 1 || quantum.circuits < 1)
        throw std::invalid_argument("model: quantum layer needs qubits, depth, circuits >= 1");
    if (quantum.qubits > 12)
        throw std::invalid_argument("model: statevector simulation is limited to 12 qubits");
}

ModelConfig classical_counterpart(ModelConfig config) {
    config.variant = Variant::classical;
    return config;
}

template <typename T>
Model<T>::Model(const ModelConfig& config) : config_(config) {
    config_.validate();
    const auto& ch = config_.conv_channels;
    blocks[0].conv = nn::Conv2d<T>(1, ch[0], 3, 1, 1);
    blocks[0].bn = nn::BatchNorm2d<T>(ch[0]);
    blocks[1].conv = nn::Conv2d<T>(ch[0], ch[1], 3, 1, 1);
    blocks[1].bn = nn::BatchNorm2d<T>(ch[1]);
    blocks[2].conv = nn::Conv2d<T>(ch[1], ch[2], 3, 1, 1);
    blocks[2].bn = nn::BatchNorm2d<T>(ch[2]);
    attention = nn::DualAttention<T>(ch[2], config_.reduction_ratio);
    projection = nn::Linear<T>(config_.flatten_width(), config_.quantum.input_width());

    if (config_.variant == Variant::hybrid) {
        const auto& qc = config_.quantum;
        circuit_angles.assign(static_cast<std::size_t>(qc.circuits),
                              Tensor<T>({qc.depth, qc.qubits, 3}));
        circuit_grads = circuit_angles;
    } else {
        quantum_replacement = nn::Linear<T>(config_.quantum.input_width(), config_.quantum.output_width());
    }
    head = nn::Linear<T>(config_.quantum.output_width(), config_.num_classes);
}

template <typename T>
void Model<T>::init_params(std::uint64_t seed) {
    Pcg32 rng(seed, /*stream=*/0x6d6f64656cULL);
    for (auto& block : blocks) block.conv.init_he(rng);
    attention.init(rng);
    projection.init_he(rng);
    if (config_.variant == Variant::hybrid) {
        for (auto& angles : circuit_angles)
            for (auto& a : angles.data) a = static_cast<T>(rng.uniform(0.0, 2.0 * 3.14159265358979323846));
    } else {
        quantum_replacement.init_he(rng);
    }
    head.init_he(rng);
}

template <typename T>
void Model<T>::set_training(bool training) {
    for (auto& block : blocks) block.bn.training = training;
}

template <typename T>
qsim::CircuitParams Model<T>::circuit_params(int circuit) const {
    const auto& qc = config_.quantum;
    qsim::CircuitParams p = qsim::CircuitParams::ring(qc.qubits, qc.depth);
    const Tensor<T>& angles = circuit_angles[static_cast<std::size_t>(circuit)];
    for (std::size_t i = 0; i < p.angles.size(); ++i) p.angles[i] = static_cast<double>(angles.data[i]);
    return p;
}

template <typename T>
ForwardResult<T> Model<T>::forward(const Tensor<T>& images) {
    if (images.rank() != 4 || images.dim(1) != 1)
        throw std::invalid_argument("model: expected [B,1,H,W] input, got " + shape_str(images.shape));
    if (images.dim(2) != config_.input_size || images.dim(3) != config_.input_size)
        throw std::invalid_argument("model: input spatial size " + shape_str(images.shape) +
                                    " does not match configured size " +
                                    std::to_string(config_.input_size));
    const int B = images.dim(0);
    const auto& qc = config_.quantum;

    Tensor<T> x = images;
    for (auto& block : blocks)
        x = block.pool.forward(block.relu.forward(block.bn.forward(block.conv.forward(x))));

    auto [f_final, ts] = attention.forward(x);

    z_ = projection.forward(f_final.reshaped({B, config_.flatten_width()}));

    ForwardResult<T> out;
    out.ts = ts;
    out.attention = nn::upsample_nearest(ts, 8);
    out.pre_head = z_;

    const int dim = 1 << qc.qubits;
    Tensor<T> qout({B, qc.output_width()});
    if (config_.variant == Variant::hybrid) {
        std::vector<double> chunk(static_cast<std::size_t>(dim));
        for (int c = 0; c < qc.circuits; ++c) {
            const qsim::CircuitParams params = circuit_params(c);
            for (int b = 0; b < B; ++b) {
                for (int i = 0; i < dim; ++i)
                    chunk[static_cast<std::size_t>(i)] = static_cast<double>(z_.at(b, c * dim + i));
                qsim::CircuitOutput co = qsim::run_circuit(chunk, params);
                if (co.degenerate_embed) ++out.degenerate_embeds;
                for (int j = 0; j < qc.qubits; ++j)
                    qout.at(b, c * qc.qubits + j) = static_cast<T>(co.expectations[static_cast<std::size_t>(j)]);
            }
        }
    } else {
        // same per-chunk L2 normalization the amplitude embedding applies,
        // so the replacement sees the quantum layer's actual input
        znorm_ = Tensor<T>(z_.shape);
        chunk_norms_.assign(static_cast<std::size_t>(B) * qc.circuits, T(0));
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < qc.circuits; ++c) {
                double sq = 0;
                for (int i = 0; i < dim; ++i) {
                    const double v = static_cast<double>(z_.at(b, c * dim + i));
                    sq += v * v;
                }
                const double nrm = std::sqrt(sq);
                chunk_norms_[static_cast<std::size_t>(b) * qc.circuits + c] = static_cast<T>(nrm);
                if (nrm <= 1e-12) {
                    ++out.degenerate_embeds;  // zero chunk, zero gradient
                } else {
                    for (int i = 0; i < dim; ++i)
                        znorm_.at(b, c * dim + i) = static_cast<T>(z_.at(b, c * dim + i) / nrm);
                }
            }
        Tensor<T> pre = quantum_replacement.forward(znorm_);
        tanh_ = Tensor<T>(pre.shape);
        for (std::size_t i = 0; i < pre.data.size(); ++i) tanh_.data[i] = std::tanh(pre.data[i]);
        qout = tanh_;
    }
    out.quantum_out = qout;
    out.logits = head.forward(qout);
    has_forward_ = true;
    return out;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T>& grad_logits, const Tensor<T>& grad_attention) {
    if (!has_forward_) throw std::logic_error("model: backward before forward");
    const int B = grad_logits.dim(0);
    const auto& qc = config_.quantum;

    Tensor<T> dqout = head.backward(grad_logits);

    Tensor<T> dz({B, qc.input_width()});
    if (config_.variant == Variant::hybrid) {
        const int dim = 1 << qc.qubits;
        std::vector<double> chunk(static_cast<std::size_t>(dim));
        std::vector<double> upstream(static_cast<std::size_t>(qc.qubits));
        for (int c = 0; c < qc.circuits; ++c) {
            const qsim::CircuitParams params = circuit_params(c);
            Tensor<T>& ga = circuit_grads[static_cast<std::size_t>(c)];
            ga.fill(T(0));
            for (int b = 0; b < B; ++b) {  // fixed order keeps reductions deterministic
                for (int i = 0; i < dim; ++i)
                    chunk[static_cast<std::size_t>(i)] = static_cast<double>(z_.at(b, c * dim + i));
                for (int j = 0; j < qc.qubits; ++j)
                    upstream[static_cast<std::size_t>(j)] =
                        static_cast<double>(dqout.at(b, c * qc.qubits + j));
                qsim::CircuitGradient g = qsim::grad_circuit(chunk, params, upstream);
                for (std::size_t i = 0; i < ga.data.size(); ++i)
                    ga.data[i] += static_cast<T>(g.grad_angles[i]);
                for (int i = 0; i < dim; ++i)
                    dz.at(b, c * dim + i) = static_cast<T>(g.grad_input[static_cast<std::size_t>(i)]);
            }
        }
    } else {
        Tensor<T> dpre(dqout.shape);
        for (std::size_t i = 0; i < dqout.data.size(); ++i) {
            const T t = tanh_.data[i];
            dpre.data[i] = dqout.data[i] * (T(1) - t * t);
        }
        Tensor<T> dznorm = quantum_replacement.backward(dpre);
        // chunk normalization Jacobian (I - vhat vhat^T) / ||v||
        const int dim = 1 << qc.qubits;
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < qc.circuits; ++c) {
                const T nrm = chunk_norms_[static_cast<std::size_t>(b) * qc.circuits + c];
                if (nrm <= T(1e-12)) {
                    for (int i = 0; i < dim; ++i) dz.at(b, c * dim + i) = T(0);
                    continue;
                }
                double dot = 0;
                for (int i = 0; i < dim; ++i)
                    dot += static_cast<double>(znorm_.at(b, c * dim + i)) *
                           static_cast<double>(dznorm.at(b, c * dim + i));
                for (int i = 0; i < dim; ++i)
                    dz.at(b, c * dim + i) = static_cast<T>(
                        (static_cast<double>(dznorm.at(b, c * dim + i)) -
                         static_cast<double>(znorm_.at(b, c * dim + i)) * dot) /
                        static_cast<double>(nrm));
            }
    }

    Tensor<T> dflat = projection.backward(dz);
    const int fs = config_.feature_size();
    Tensor<T> df_final = dflat.reshaped({B, config_.conv_channels[2], fs, fs});

    Tensor<T> dts;
    if (grad_attention.numel() != 0) dts = nn::upsample_nearest_backward(grad_attention, 8);
    Tensor<T> dx = attention.backward(df_final, dts);

    for (int i = 2; i >= 0; --i) {
        auto& block = blocks[static_cast<std::size_t>(i)];
        dx = block.conv.backward(block.bn.backward(block.relu.backward(block.pool.backward(dx))));
    }
    return dx;
}

template <typename T>
std::vector<ParamRef<T>> Model<T>::parameters() {
    std::vector<ParamRef<T>> out;
    const char* names[3] = {"block1", "block2", "block3"};
    for (int i = 0; i < 3; ++i) {
        auto& block = blocks[static_cast<std::size_t>(i)];
        std::string p(names[i]);
        out.push_back({p + "/conv/weight", &block.conv.weight, &block.conv.grad_weight});
        out.push_back({p + "/conv/bias", &block.conv.bias, &block.conv.grad_bias});
        out.push_back({p + "/bn/gamma", &block.bn.gamma, &block.bn.grad_gamma});
        out.push_back({p + "/bn/beta", &block.bn.beta, &block.bn.grad_beta});
    }
    auto add_conv = [&out](const std::string& name, nn::Conv2d<T>& c) {
        out.push_back({name + "/weight", &c.weight, &c.grad_weight});
        out.push_back({name + "/bias", &c.bias, &c.grad_bias});
    };
    add_conv("attn/channel/reduce", attention.channel.reduce);
    add_conv("attn/channel/expand", attention.channel.expand);
    add_conv("attn/spatial/conv1", attention.spatial.conv1);
    add_conv("attn/spatial/conv3", attention.spatial.conv3);
    add_conv("attn/spatial/conv5", attention.spatial.conv5);
    add_conv("attn/spatial/fuse7", attention.spatial.fuse7);
    out.push_back({"proj/weight", &projection.weight, &projection.grad_weight});
    out.push_back({"proj/bias", &projection.bias, &projection.grad_bias});
    if (config_.variant == Variant::hybrid) {
        for (std::size_t c = 0; c < circuit_angles.size(); ++c)
            out.push_back({"circuit" + std::to_string(c) + "/angles", &circuit_angles[c], &circuit_grads[c]});
    } else {
        out.push_back({"qreplace/weight", &quantum_replacement.weight, &quantum_replacement.grad_weight});
        out.push_back({"qreplace/bias", &quantum_replacement.bias, &quantum_replacement.grad_bias});
    }
    out.push_back({"head/weight", &head.weight, &head.grad_weight});
    out.push_back({"head/bias", &head.bias, &head.grad_bias});
    return out;
}

template <typename T>
std::vector<ParamRef<T>> Model<T>::state_entries() {
    std::vector<ParamRef<T>> out = parameters();
    const char* names[3] = {"block1", "block2", "block3"};
    for (int i = 0; i < 3; ++i) {
        auto& block = blocks[static_cast<std::size_t>(i)];
        std::string p(names[i]);
        out.push_back({p + "/bn/running_mean", &block.bn.running_mean, nullptr});
        out.push_back({p + "/bn/running_var", &block.bn.running_var, nullptr});
    }
    return out;
}

template <typename T>
std::int64_t Model<T>::param_count() const {
    std::int64_t n = 0;
    for (const auto& p : const_cast<Model<T>*>(this)->parameters()) n += p.tensor->numel();
    return n;
}

template class Model<float>;
template class Model<double>;

}  // namespace hqcm
