#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "netcut/tensor.hpp"

namespace netcut {

// Topology of a multi-head network: one uniform-width dense block per node
// (relu activation), one classifier head per node. Node ids are 0-based in
// memory and 1-based in the graph description file.
struct ArchGraph {
    std::size_t n = 0;        // node count == head count
    std::size_t width = 0;    // uniform block width
    std::size_t in_dim = 0;   // sample feature count (0 until known)
    std::size_t classes = 0;  // class count (0 until known)
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (i -> j), i < j
    std::size_t input = 0;    // the node that consumes the sample

    std::vector<std::size_t> preds(std::size_t j) const;
    // ancestors(k) plus k itself, as a node mask
    std::vector<bool> ancestor_mask(std::size_t k) const;
    bool is_chain() const;
    // enforces i < j, ids in range, no duplicate edges, full reachability
    void validate() const;
};

// Path graph 1 -> 2 -> ... -> n_layers with a head on every node.
ArchGraph build_chain(std::size_t n_layers, std::size_t width, std::size_t in_dim,
                      std::size_t classes);

// Random upper-triangular DAG: each pair (i, j), i < j drawn with probability
// edge_prob, then (i-1 -> i) added for any node left without a predecessor so
// everything stays reachable from node 0. Deterministic per seed. Width and
// dataset dims are left unset.
ArchGraph random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed);

// e(k): number of edges whose target lies in ancestors(k) + {k}.
std::size_t edge_cost(const ArchGraph& arch, std::size_t k);

// Per-head regularizer costs: 1-based depth index for a chain, e(k) otherwise.
std::vector<double> reg_costs(const ArchGraph& arch);

// Graph description file: `nodes <n>`, `width <w>`, `edge <i> <j>` (1-based).
void write_graph_file(const std::string& path, const ArchGraph& arch);
ArchGraph load_graph_file(const std::string& path);

}  // namespace netcut
