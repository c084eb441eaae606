#include "hqcm/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace hqcm {

template <typename T>
void AdamW<T>::step(std::vector<ParamRef<T>>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].tensor->data.size(), 0.0);
            v_[i].assign(params[i].tensor->data.size(), 0.0);
        }
    }
    if (m_.size() != params.size())
        throw std::invalid_argument("adamw: parameter list changed between steps");

    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, step_);
    const double bc2 = 1.0 - std::pow(config_.beta2, step_);

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& p = *params[i].tensor;
        const Tensor<T>& g = *params[i].grad;
        if (!p.same_shape(g))
            throw std::invalid_argument("adamw: gradient shape mismatch for '" + params[i].name + "'");
        if (m_[i].size() != p.data.size())
            throw std::invalid_argument("adamw: parameter '" + params[i].name + "' resized between steps");

        for (std::size_t j = 0; j < p.data.size(); ++j) {
            const double grad = static_cast<double>(g.data[j]);
            m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * grad;
            v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * grad * grad;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            double x = static_cast<double>(p.data[j]);
            x -= config_.lr * config_.weight_decay * x;  // decoupled decay
            x -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
            p.data[j] = static_cast<T>(x);
        }
    }
}

template <typename T>
double clip_grad_norm(std::vector<ParamRef<T>>& params, double max_norm) {
    double sq = 0;
    for (const auto& p : params)
        for (T g : p.grad->data) sq += static_cast<double>(g) * static_cast<double>(g);
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0) {
        const double scale = max_norm / norm;
        for (auto& p : params)
            for (T& g : p.grad->data) g = static_cast<T>(static_cast<double>(g) * scale);
    }
    return norm;
}

double PlateauScheduler::step(double val_loss) {
    if (val_loss < best_ - threshold_) {
        best_ = val_loss;
        bad_epochs_ = 0;
        return 1.0;
    }
    ++bad_epochs_;
    if (bad_epochs_ >= patience_) {
        bad_epochs_ = 0;
        return factor_;
    }
    return 1.0;
}

template class AdamW<float>;
template class AdamW<double>;
template double clip_grad_norm(std::vector<ParamRef<float>>&, double);
template double clip_grad_norm(std::vector<ParamRef<double>>&, double);

}  // namespace hqcm
