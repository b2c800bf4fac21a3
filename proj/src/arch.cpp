#include "netcut/arch.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "netcut/rng.hpp"

namespace netcut {

std::vector<std::size_t> ArchGraph::preds(std::size_t j) const {
    std::vector<std::size_t> p;
    for (const auto& [a, b] : edges)
        if (b == j) p.push_back(a);
    std::sort(p.begin(), p.end());
    return p;
}

std::vector<bool> ArchGraph::ancestor_mask(std::size_t k) const {
    if (k >= n) throw IndexError("node " + std::to_string(k) + " out of range");
    std::vector<bool> mask(n, false);
    mask[k] = true;
    // edges point forward, so one backward sweep closes the set
    for (std::size_t j = k + 1; j-- > 0;) {
        if (!mask[j]) continue;
        for (const auto& [a, b] : edges)
            if (b == j) mask[a] = true;
    }
    return mask;
}

bool ArchGraph::is_chain() const {
    if (edges.size() != (n == 0 ? 0 : n - 1)) return false;
    std::vector<std::pair<std::size_t, std::size_t>> sorted = edges;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k + 1 < n; ++k)
        if (sorted[k] != std::make_pair(k, k + 1)) return false;
    return true;
}

void ArchGraph::validate() const {
    if (n == 0) throw ConfigError("graph has no nodes");
    std::vector<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [a, b] : edges) {
        if (a >= n || b >= n)
            throw FormatError("edge " + std::to_string(a + 1) + " -> " +
                              std::to_string(b + 1) + " references a node beyond " +
                              std::to_string(n));
        if (a >= b)
            throw FormatError("edge " + std::to_string(a + 1) + " -> " +
                              std::to_string(b + 1) + " does not point forward");
        seen.emplace_back(a, b);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw FormatError("duplicate edge in graph");
    std::vector<bool> reached(n, false);
    reached[input] = true;
    for (std::size_t j = 1; j < n; ++j)
        for (const auto& [a, b] : edges)
            if (b == j && reached[a]) reached[j] = true;
    for (std::size_t j = 0; j < n; ++j)
        if (!reached[j])
            throw FormatError("node " + std::to_string(j + 1) +
                              " is unreachable from the input node");
}

ArchGraph build_chain(std::size_t n_layers, std::size_t width, std::size_t in_dim,
                      std::size_t classes) {
    if (n_layers == 0 || width == 0 || in_dim == 0 || classes == 0)
        throw ConfigError("build_chain requires positive layer count, width, input "
                          "dimension and class count");
    ArchGraph g;
    g.n = n_layers;
    g.width = width;
    g.in_dim = in_dim;
    g.classes = classes;
    for (std::size_t k = 0; k + 1 < n_layers; ++k) g.edges.emplace_back(k, k + 1);
    return g;
}

ArchGraph random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed) {
    if (n_nodes == 0) throw ConfigError("random_dag requires at least one node");
    if (edge_prob < 0.0 || edge_prob > 1.0)
        throw ConfigError("edge probability must lie in [0, 1]");
    ArchGraph g;
    g.n = n_nodes;
    Rng rng(seed);
    std::vector<bool> has_pred(n_nodes, false);
    for (std::size_t i = 0; i + 1 < n_nodes; ++i)
        for (std::size_t j = i + 1; j < n_nodes; ++j)
            if (rng.uniform() < edge_prob) {
                g.edges.emplace_back(i, j);
                has_pred[j] = true;
            }
    for (std::size_t j = 1; j < n_nodes; ++j)
        if (!has_pred[j]) g.edges.emplace_back(j - 1, j);
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

std::size_t edge_cost(const ArchGraph& arch, std::size_t k) {
    const std::vector<bool> mask = arch.ancestor_mask(k);  // throws on bad k
    std::size_t count = 0;
    for (const auto& [a, b] : arch.edges) {
        (void)a;
        if (mask[b]) ++count;
    }
    return count;
}

std::vector<double> reg_costs(const ArchGraph& arch) {
    std::vector<double> costs(arch.n);
    if (arch.is_chain()) {
        for (std::size_t k = 0; k < arch.n; ++k)
            costs[k] = static_cast<double>(k + 1);
    } else {
        for (std::size_t k = 0; k < arch.n; ++k)
            costs[k] = static_cast<double>(edge_cost(arch, k));
    }
    return costs;
}

void write_graph_file(const std::string& path, const ArchGraph& arch) {
    arch.validate();
    if (arch.width == 0) throw ConfigError("graph width not set");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << "nodes " << arch.n << "\n";
    out << "width " << arch.width << "\n";
    std::vector<std::pair<std::size_t, std::size_t>> sorted = arch.edges;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [a, b] : sorted) out << "edge " << a + 1 << " " << b + 1 << "\n";
    if (!out) throw ConfigError("failed writing " + path);
}

ArchGraph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open graph file " + path);
    ArchGraph g;
    bool saw_nodes = false, saw_width = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;  // blank line
        const std::string where = path + ":" + std::to_string(lineno);
        long long a = 0, b = 0;
        if (word == "nodes") {
            if (!(ls >> a) || a <= 0) throw FormatError(where + ": bad node count");
            g.n = static_cast<std::size_t>(a);
            saw_nodes = true;
        } else if (word == "width") {
            if (!(ls >> a) || a <= 0) throw FormatError(where + ": bad width");
            g.width = static_cast<std::size_t>(a);
            saw_width = true;
        } else if (word == "edge") {
            if (!(ls >> a >> b) || a <= 0 || b <= 0)
                throw FormatError(where + ": edge needs two positive node ids");
            g.edges.emplace_back(static_cast<std::size_t>(a - 1),
                                 static_cast<std::size_t>(b - 1));
        } else {
            throw FormatError(where + ": unknown directive '" + word + "'");
        }
        std::string extra;
        if (ls >> extra) throw FormatError(where + ": trailing tokens");
    }
    if (!saw_nodes) throw FormatError(path + ": missing 'nodes' line");
    if (!saw_width) throw FormatError(path + ": missing 'width' line");
    g.validate();
    return g;
}

}  // namespace netcut
