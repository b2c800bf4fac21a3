#pragma once

#include <string>
#include <vector>

#include "netcut/model.hpp"

namespace netcut {

// The single-head network left after cutting: the chosen head's ancestor
// blocks (renumbered, order preserved) plus that one head. The chosen node is
// always the last node of the pruned graph.
struct CutModel {
    ArchGraph arch;            // pruned; n == kept.size()
    std::vector<DenseLayer> blocks;
    DenseLayer head;
    std::size_t chosen = 0;       // node id in the original graph
    double retained_cost = 0.0;   // depth index (chain) or e(chosen) (DAG)
    std::vector<std::size_t> kept;  // original node ids, ascending

    std::size_t param_count() const;
    std::size_t depth() const { return arch.n; }
};

// argmax_k w_k with ties broken toward the smallest index.
std::size_t choose_head(const Tensor& u);

// Prune to the chosen head. Copies parameters; forward_cut then reproduces the
// full model's chosen-head output bitwise (same kernels, same order).
CutModel cut(const ArchGraph& arch, const ModelParams& params);
CutModel cut(const CutModel& m);  // idempotent

// Single-head forward returning log-probs.
Tensor forward_cut(const CutModel& m, const Tensor& batch);

// NETCUT01 container: text header (kind, graph description, tensor manifest)
// followed by raw little-endian 64-bit float records. Round-trips bitwise.
void save_model(const std::string& path, const ArchGraph& arch,
                const ModelParams& params);
void save_model(const std::string& path, const CutModel& m);

struct ModelFile {
    bool is_cut = false;
    ArchGraph arch;
    ModelParams params;  // full models
    CutModel cut;        // cut models
};
ModelFile load_model(const std::string& path);

}  // namespace netcut
