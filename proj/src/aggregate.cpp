#include "netcut/aggregate.hpp"

namespace netcut {

Var head_weights(CompGraph& g, Var u) { return g.softmax_vec(u); }

Var aggregate_log(CompGraph& g, const std::vector<Var>& head_logprobs, Var w) {
    return g.weighted_sum(head_logprobs, w);
}

Var aggregate_prob(CompGraph& g, const std::vector<Var>& head_logprobs, Var w) {
    return g.weighted_logsumexp(head_logprobs, w);
}

Var aggregate_prob_naive(CompGraph& g, const std::vector<Var>& head_logits, Var w) {
    std::vector<Var> probs;
    probs.reserve(head_logits.size());
    for (Var z : head_logits) probs.push_back(g.naive_softmax(z));
    return g.log(g.weighted_sum(probs, w));
}

Var class_loss(CompGraph& g, Var agg_logprobs, const std::vector<std::size_t>& labels) {
    return g.pick_nll(agg_logprobs, labels);
}

std::vector<std::size_t> onehot_to_labels(const Tensor& y_onehot) {
    if (y_onehot.rank() != 2)
        throw LabelError("one-hot labels must be a matrix, got " + y_onehot.shape_str());
    std::vector<std::size_t> labels(y_onehot.rows());
    for (std::size_t r = 0; r < y_onehot.rows(); ++r) {
        std::size_t ones = 0;
        for (std::size_t c = 0; c < y_onehot.cols(); ++c) {
            const double v = y_onehot.at(r, c);
            if (v == 1.0) {
                labels[r] = c;
                ++ones;
            } else if (v != 0.0) {
                throw LabelError("row " + std::to_string(r) +
                                 " is not one-hot: entry " + std::to_string(v));
            }
        }
        if (ones != 1)
            throw LabelError("row " + std::to_string(r) + " has " +
                             std::to_string(ones) + " ones; exactly one required");
    }
    return labels;
}

Var class_loss(CompGraph& g, Var agg_logprobs, const Tensor& y_onehot) {
    if (y_onehot.rows() != agg_logprobs.value().rows() ||
        y_onehot.cols() != agg_logprobs.value().cols())
        throw DimensionError("labels " + y_onehot.shape_str() +
                             " do not match outputs " +
                             agg_logprobs.value().shape_str());
    return class_loss(g, agg_logprobs, onehot_to_labels(y_onehot));
}

Var time_reg(CompGraph& g, Var w, const std::vector<double>& costs) {
    if (costs.size() != w.value().numel())
        throw DimensionError("cost vector of length " + std::to_string(costs.size()) +
                             " does not match " + std::to_string(w.value().numel()) +
                             " heads");
    for (double c : costs)
        if (c < 0.0) throw ConfigError("regularizer costs must be non-negative");
    return g.dot(w, g.constant(Tensor::vec(std::vector<double>(costs))));
}

Var total_loss(CompGraph& g, Var class_l, Var reg, double beta) {
    if (beta < 0.0) throw ConfigError("beta must be non-negative");
    return g.add_scaled(class_l, reg, beta);
}

}  // namespace netcut
