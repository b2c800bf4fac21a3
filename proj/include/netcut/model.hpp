#pragma once

#include <cstdint>
#include <vector>

#include "netcut/arch.hpp"
#include "netcut/graph.hpp"
#include "netcut/tensor.hpp"

namespace netcut {

struct DenseLayer {
    Tensor W;  // [fan_in x fan_out]
    Tensor b;  // [fan_out]
};

// All trainable state: one block and one head per node, plus the head logits u.
struct ModelParams {
    std::vector<DenseLayer> blocks;
    std::vector<DenseLayer> heads;
    Tensor u;  // [n]; head importance weights are softmax(u)

    std::size_t param_count() const;
    // every trainable tensor, blocks then heads then u, in node order
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
};

// Dense weights ~ U[-m*s, m*s] with s = sqrt(6 / (fan_in + fan_out)), biases
// zero, u zero; scale m > 1 deliberately de-conditions deep stacks.
ModelParams init_params(const ArchGraph& arch, double scale, std::uint64_t seed);

// The model's tensors registered on a tape as gradient-carrying leaves.
struct BoundParams {
    std::vector<Var> block_W, block_b, head_W, head_b;
    Var u;
};
BoundParams bind_params(CompGraph& g, const ModelParams& params);

// One forward pass over every node: node input is the sample batch at the
// input node, otherwise the sum of its predecessors' block outputs (ascending
// node order); each head maps its block output to class logits.
std::vector<Var> forward_logits(CompGraph& g, const ArchGraph& arch,
                                const BoundParams& bound, Var batch);

// log_softmax over every head's logits: the log o_k of the aggregation step.
std::vector<Var> forward_logprobs(CompGraph& g, const ArchGraph& arch,
                                  const BoundParams& bound, Var batch);

// Tape-free forward for evaluation and benchmarking. Runs the same kernels in
// the same order as the tape path, so outputs are bitwise identical to it.
std::vector<Tensor> infer_logits(const ArchGraph& arch, const ModelParams& params,
                                 const Tensor& batch);

// Stable per-head log-probs from infer_logits output.
std::vector<Tensor> infer_logprobs(const ArchGraph& arch, const ModelParams& params,
                                   const Tensor& batch);

// softmax(u) as plain numbers (matches the tape's softmax_vec bitwise).
std::vector<double> head_weight_values(const Tensor& u);

}  // namespace netcut
