#pragma once

#include <string>
#include <vector>

#include "netcut/model.hpp"
#include "netcut/train.hpp"

namespace netcut {

// Names one parameter tensor: "block<i>.W", "block<i>.b", "head<i>.W",
// "head<i>.b" (1-based i) or "u".
struct ParamSelector {
    enum class Kind { BlockW, BlockB, HeadW, HeadB, U } kind;
    std::size_t index = 0;  // 0-based node id

    static ParamSelector parse(const std::string& name, std::size_t n_nodes);
    std::string name() const;
};

// Gradient of the total loss w.r.t. the selected tensor with gradient flow
// blocked at every head output except head l's.
Tensor partial_gradient(const ArchGraph& arch, const ModelParams& params,
                        const Tensor& batch, const std::vector<std::size_t>& labels,
                        std::size_t l, const ParamSelector& sel, Scheme scheme,
                        double beta);

// Same loss, no blocking: the full gradient the partials sum to.
Tensor full_gradient(const ArchGraph& arch, const ModelParams& params,
                     const Tensor& batch, const std::vector<std::size_t>& labels,
                     const ParamSelector& sel, Scheme scheme, double beta);

// <v,u> / (|v||u|); a zero-norm operand is a degenerate input.
double cosine_similarity(const Tensor& v, const Tensor& u);

struct GradientReport {
    std::size_t heads = 0;
    ParamSelector selector;
    std::size_t batch_rows = 0;
    std::vector<double> rho_full;            // rho(g^k, g); NaN = gap
    std::vector<std::vector<double>> rho;    // rho(g^x, g^y); NaN = gap
};

// All n partials plus the full gradient on one fixed batch.
GradientReport gradient_report(const ArchGraph& arch, const ModelParams& params,
                               const Tensor& batch,
                               const std::vector<std::size_t>& labels,
                               const ParamSelector& sel, Scheme scheme, double beta);

// `head, rho_vs_full` rows; degenerate cells spelled `gap`.
void write_rho_vector_csv(const std::string& path, const GradientReport& report);
// head-indexed matrix with a header row and column; `gap` cells as above.
void write_rho_matrix_csv(const std::string& path, const GradientReport& report);

}  // namespace netcut
