#pragma once

#include <vector>

#include "netcut/graph.hpp"
#include "netcut/tensor.hpp"

namespace netcut {

// Head importance weights on the tape: w = softmax(u), strictly positive and
// summing to one.
Var head_weights(CompGraph& g, Var u);

// log o = sum_k w_k * log o_k. Stays in log space; per sample the exponential
// sums to at most 1 (Jensen), with equality only for one-hot w.
Var aggregate_log(CompGraph& g, const std::vector<Var>& head_logprobs, Var w);

// log o = ln sum_k w_k exp(log o_k), computed with a max shift; per sample the
// exponential sums to exactly 1.
Var aggregate_prob(CompGraph& g, const std::vector<Var>& head_logprobs, Var w);

// The probability-averaging pipeline as naively written: softmax without a max
// shift on raw head logits, weighted average, then log. Overflows to non-finite
// values for large logits; the trainer's NaN guard is the intended consumer.
Var aggregate_prob_naive(CompGraph& g, const std::vector<Var>& head_logits, Var w);

// Mean over the batch of -log o at the true class.
Var class_loss(CompGraph& g, Var agg_logprobs, const std::vector<std::size_t>& labels);

// One-hot form; rows that are not exactly one-hot raise a label error.
Var class_loss(CompGraph& g, Var agg_logprobs, const Tensor& y_onehot);

std::vector<std::size_t> onehot_to_labels(const Tensor& y_onehot);

// L_reg = sum_k w_k * cost_k.
Var time_reg(CompGraph& g, Var w, const std::vector<double>& costs);

// L = L_class + beta * L_reg.
Var total_loss(CompGraph& g, Var class_l, Var reg, double beta);

}  // namespace netcut
