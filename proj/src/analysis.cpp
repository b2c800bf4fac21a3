#include "netcut/analysis.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "netcut/aggregate.hpp"

namespace netcut {

ParamSelector ParamSelector::parse(const std::string& name, std::size_t n_nodes) {
    if (name == "u") return {Kind::U, 0};
    const auto parse_indexed = [&](const std::string& prefix) -> std::optional<std::pair<std::size_t, char>> {
        if (name.rfind(prefix, 0) != 0) return std::nullopt;
        const std::size_t dot = name.rfind('.');
        if (dot == std::string::npos || dot <= prefix.size() ||
            dot + 2 != name.size())
            return std::nullopt;
        const char field = name[dot + 1];
        if (field != 'W' && field != 'b') return std::nullopt;
        std::size_t idx = 0;
        for (std::size_t i = prefix.size(); i < dot; ++i) {
            if (name[i] < '0' || name[i] > '9') return std::nullopt;
            idx = idx * 10 + static_cast<std::size_t>(name[i] - '0');
        }
        if (idx == 0) return std::nullopt;
        return std::make_pair(idx - 1, field);
    };
    if (auto hit = parse_indexed("block")) {
        if (hit->first >= n_nodes)
            throw ConfigError("selector '" + name + "' exceeds " +
                              std::to_string(n_nodes) + " nodes");
        return {hit->second == 'W' ? Kind::BlockW : Kind::BlockB, hit->first};
    }
    if (auto hit = parse_indexed("head")) {
        if (hit->first >= n_nodes)
            throw ConfigError("selector '" + name + "' exceeds " +
                              std::to_string(n_nodes) + " nodes");
        return {hit->second == 'W' ? Kind::HeadW : Kind::HeadB, hit->first};
    }
    throw ConfigError("unknown parameter selector '" + name +
                      "' (expected block<i>.W, block<i>.b, head<i>.W, head<i>.b or u)");
}

std::string ParamSelector::name() const {
    switch (kind) {
        case Kind::BlockW: return "block" + std::to_string(index + 1) + ".W";
        case Kind::BlockB: return "block" + std::to_string(index + 1) + ".b";
        case Kind::HeadW: return "head" + std::to_string(index + 1) + ".W";
        case Kind::HeadB: return "head" + std::to_string(index + 1) + ".b";
        case Kind::U: return "u";
    }
    return "?";
}

namespace {

Var select_leaf(const BoundParams& bound, const ParamSelector& sel) {
    switch (sel.kind) {
        case ParamSelector::Kind::BlockW: return bound.block_W[sel.index];
        case ParamSelector::Kind::BlockB: return bound.block_b[sel.index];
        case ParamSelector::Kind::HeadW: return bound.head_W[sel.index];
        case ParamSelector::Kind::HeadB: return bound.head_b[sel.index];
        case ParamSelector::Kind::U: return bound.u;
    }
    throw ContractError("invalid selector kind");
}

Tensor loss_gradient(const ArchGraph& arch, const ModelParams& params,
                     const Tensor& batch, const std::vector<std::size_t>& labels,
                     const ParamSelector& sel, Scheme scheme, double beta,
                     std::optional<std::size_t> only_head) {
    if (only_head && *only_head >= arch.n)
        throw IndexError("head " + std::to_string(*only_head) + " out of range");
    CompGraph g;
    const BoundParams bound = bind_params(g, params);
    const Var Xb = g.constant(batch);
    std::vector<Var> heads = forward_logits(g, arch, bound, Xb);
    const Var w = head_weights(g, bound.u);
    Var agg;
    if (scheme == Scheme::ProbNaive) {
        for (std::size_t k = 0; k < heads.size(); ++k) {
            heads[k] = g.naive_softmax(heads[k]);
            if (only_head && k != *only_head) heads[k] = g.stop_grad(heads[k]);
        }
        agg = g.log(g.weighted_sum(heads, w));
    } else {
        for (std::size_t k = 0; k < heads.size(); ++k) {
            heads[k] = g.log_softmax(heads[k]);
            if (only_head && k != *only_head) heads[k] = g.stop_grad(heads[k]);
        }
        agg = scheme == Scheme::Log ? aggregate_log(g, heads, w)
                                    : aggregate_prob(g, heads, w);
    }
    const Var loss = total_loss(g, class_loss(g, agg, labels),
                                time_reg(g, w, reg_costs(arch)), beta);
    g.backward(loss);
    return select_leaf(bound, sel).grad();
}

}  // namespace

Tensor partial_gradient(const ArchGraph& arch, const ModelParams& params,
                        const Tensor& batch, const std::vector<std::size_t>& labels,
                        std::size_t l, const ParamSelector& sel, Scheme scheme,
                        double beta) {
    return loss_gradient(arch, params, batch, labels, sel, scheme, beta, l);
}

Tensor full_gradient(const ArchGraph& arch, const ModelParams& params,
                     const Tensor& batch, const std::vector<std::size_t>& labels,
                     const ParamSelector& sel, Scheme scheme, double beta) {
    return loss_gradient(arch, params, batch, labels, sel, scheme, beta, std::nullopt);
}

double cosine_similarity(const Tensor& v, const Tensor& u) {
    if (v.numel() != u.numel())
        throw DimensionError("cosine similarity needs equal lengths, got " +
                             v.shape_str() + " vs " + u.shape_str());
    double dot = 0, nv = 0, nu = 0;
    for (std::size_t i = 0; i < v.numel(); ++i) {
        dot += v[i] * u[i];
        nv += v[i] * v[i];
        nu += u[i] * u[i];
    }
    if (nv == 0.0 || nu == 0.0)
        throw NumericError("zero-norm vector in cosine similarity");
    return dot / (std::sqrt(nv) * std::sqrt(nu));
}

GradientReport gradient_report(const ArchGraph& arch, const ModelParams& params,
                               const Tensor& batch,
                               const std::vector<std::size_t>& labels,
                               const ParamSelector& sel, Scheme scheme, double beta) {
    GradientReport rep;
    rep.heads = arch.n;
    rep.selector = sel;
    rep.batch_rows = batch.rows();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    const Tensor full = full_gradient(arch, params, batch, labels, sel, scheme, beta);
    std::vector<Tensor> partials;
    for (std::size_t k = 0; k < arch.n; ++k)
        partials.push_back(
            partial_gradient(arch, params, batch, labels, k, sel, scheme, beta));

    rep.rho_full.assign(arch.n, nan);
    for (std::size_t k = 0; k < arch.n; ++k) {
        try {
            rep.rho_full[k] = cosine_similarity(partials[k], full);
        } catch (const NumericError&) {
        }
    }
    rep.rho.assign(arch.n, std::vector<double>(arch.n, nan));
    for (std::size_t a = 0; a < arch.n; ++a)
        for (std::size_t b = a; b < arch.n; ++b) {
            try {
                const double r = cosine_similarity(partials[a], partials[b]);
                rep.rho[a][b] = r;
                rep.rho[b][a] = r;
            } catch (const NumericError&) {
            }
        }
    return rep;
}

namespace {

void write_cell(std::ostream& out, double v) {
    if (std::isnan(v))
        out << "gap";
    else
        out << v;
}

void write_report_header(std::ostream& out, const GradientReport& rep) {
    out << "# selector=" << rep.selector.name() << " batch=" << rep.batch_rows
        << "\n";
}

}  // namespace

void write_rho_vector_csv(const std::string& path, const GradientReport& rep) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    write_report_header(out, rep);
    out << "head,rho_vs_full\n";
    for (std::size_t k = 0; k < rep.heads; ++k) {
        out << k + 1 << ',';
        write_cell(out, rep.rho_full[k]);
        out << "\n";
    }
    if (!out) throw ConfigError("failed writing " + path);
}

void write_rho_matrix_csv(const std::string& path, const GradientReport& rep) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    write_report_header(out, rep);
    for (std::size_t k = 1; k <= rep.heads; ++k) out << ',' << k;
    out << "\n";
    for (std::size_t a = 0; a < rep.heads; ++a) {
        out << a + 1;
        for (std::size_t b = 0; b < rep.heads; ++b) {
            out << ',';
            write_cell(out, rep.rho[a][b]);
        }
        out << "\n";
    }
    if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace netcut
