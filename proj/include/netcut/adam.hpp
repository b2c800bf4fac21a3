#pragma once

#include <vector>

#include "netcut/tensor.hpp"

namespace netcut {

// Standard bias-corrected Adam over a fixed list of parameter tensors, with a
// per-tensor learning rate so head logits can move faster than the dense
// weights. A step with any non-finite gradient is aborted in full: no tensor
// moves, the step counter stays, and the caller is told so it can apply the
// NaN policy.
class Adam {
public:
    Adam(const std::vector<Tensor*>& params, std::vector<double> lrs,
         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // false = aborted on a non-finite gradient
    bool step(const std::vector<const Tensor*>& grads);

    std::size_t steps() const { return t_; }

private:
    std::vector<Tensor*> params_;
    std::vector<double> lrs_;
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace netcut
