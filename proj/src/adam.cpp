#include "netcut/adam.hpp"

#include <cmath>

namespace netcut {

Adam::Adam(const std::vector<Tensor*>& params, std::vector<double> lrs, double beta1,
           double beta2, double eps)
    : params_(params), lrs_(std::move(lrs)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (params_.size() != lrs_.size())
        throw ContractError("one learning rate per parameter tensor required");
    for (double lr : lrs_)
        if (lr < 0.0) throw ConfigError("learning rate must be non-negative");
    for (Tensor* p : params_) {
        m_.push_back(Tensor::zeros(p->shape));
        v_.push_back(Tensor::zeros(p->shape));
    }
}

bool Adam::step(const std::vector<const Tensor*>& grads) {
    if (grads.size() != params_.size())
        throw ContractError("gradient list does not match parameter list");
    for (std::size_t s = 0; s < params_.size(); ++s) {
        if (!params_[s]->same_shape(*grads[s]))
            throw DimensionError("gradient shape " + grads[s]->shape_str() +
                                 " does not match parameter " +
                                 params_[s]->shape_str());
        if (!grads[s]->all_finite()) return false;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t s = 0; s < params_.size(); ++s) {
        Tensor& p = *params_[s];
        const Tensor& g = *grads[s];
        Tensor& m = m_[s];
        Tensor& v = v_[s];
        const double lr = lrs_[s];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
    return true;
}

}  // namespace netcut
