#include "netcut/model.hpp"

#include <algorithm>
#include <cmath>

#include "netcut/kernels.hpp"
#include "netcut/rng.hpp"

namespace netcut {

std::size_t ModelParams::param_count() const {
    std::size_t c = u.numel();
    for (const DenseLayer& l : blocks) c += l.W.numel() + l.b.numel();
    for (const DenseLayer& l : heads) c += l.W.numel() + l.b.numel();
    return c;
}

std::vector<Tensor*> ModelParams::tensors() {
    std::vector<Tensor*> out;
    for (DenseLayer& l : blocks) {
        out.push_back(&l.W);
        out.push_back(&l.b);
    }
    for (DenseLayer& l : heads) {
        out.push_back(&l.W);
        out.push_back(&l.b);
    }
    out.push_back(&u);
    return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
    std::vector<const Tensor*> out;
    for (const DenseLayer& l : blocks) {
        out.push_back(&l.W);
        out.push_back(&l.b);
    }
    for (const DenseLayer& l : heads) {
        out.push_back(&l.W);
        out.push_back(&l.b);
    }
    out.push_back(&u);
    return out;
}

namespace {

DenseLayer init_dense(std::size_t fan_in, std::size_t fan_out, double scale, Rng& rng) {
    DenseLayer l;
    l.W = Tensor({fan_in, fan_out});
    l.b = Tensor({fan_out});
    const double s = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : l.W.values) v = rng.uniform(-s, s);
    return l;
}

std::size_t block_fan_in(const ArchGraph& arch, std::size_t j) {
    return j == arch.input ? arch.in_dim : arch.width;
}

}  // namespace

ModelParams init_params(const ArchGraph& arch, double scale, std::uint64_t seed) {
    arch.validate();
    if (arch.width == 0 || arch.in_dim == 0 || arch.classes == 0)
        throw ConfigError("cannot initialize parameters: width, input dimension and "
                          "class count must all be set");
    if (scale <= 0.0) throw ConfigError("parameter init scale must be positive");
    ModelParams p;
    Rng rng(seed);
    for (std::size_t j = 0; j < arch.n; ++j)
        p.blocks.push_back(init_dense(block_fan_in(arch, j), arch.width, scale, rng));
    for (std::size_t j = 0; j < arch.n; ++j)
        p.heads.push_back(init_dense(arch.width, arch.classes, scale, rng));
    p.u = Tensor({arch.n});
    return p;
}

BoundParams bind_params(CompGraph& g, const ModelParams& params) {
    BoundParams b;
    for (const DenseLayer& l : params.blocks) {
        b.block_W.push_back(g.leaf(l.W));
        b.block_b.push_back(g.leaf(l.b));
    }
    for (const DenseLayer& l : params.heads) {
        b.head_W.push_back(g.leaf(l.W));
        b.head_b.push_back(g.leaf(l.b));
    }
    b.u = g.leaf(params.u);
    return b;
}

std::vector<Var> forward_logits(CompGraph& g, const ArchGraph& arch,
                                const BoundParams& bound, Var batch) {
    if (batch.value().cols() != arch.in_dim)
        throw DimensionError("batch " + batch.value().shape_str() +
                             " does not match input dimension " +
                             std::to_string(arch.in_dim));
    std::vector<Var> block_out(arch.n);
    for (std::size_t j = 0; j < arch.n; ++j) {
        Var in;
        if (j == arch.input) {
            in = batch;
        } else {
            const std::vector<std::size_t> preds = arch.preds(j);
            in = block_out[preds[0]];
            for (std::size_t p = 1; p < preds.size(); ++p)
                in = g.add(in, block_out[preds[p]]);
        }
        block_out[j] =
            g.relu(g.add_bias(g.matmul(in, bound.block_W[j]), bound.block_b[j]));
    }
    std::vector<Var> logits(arch.n);
    for (std::size_t k = 0; k < arch.n; ++k)
        logits[k] =
            g.add_bias(g.matmul(block_out[k], bound.head_W[k]), bound.head_b[k]);
    return logits;
}

std::vector<Var> forward_logprobs(CompGraph& g, const ArchGraph& arch,
                                  const BoundParams& bound, Var batch) {
    std::vector<Var> logits = forward_logits(g, arch, bound, batch);
    for (Var& z : logits) z = g.log_softmax(z);
    return logits;
}

std::vector<Tensor> infer_logits(const ArchGraph& arch, const ModelParams& params,
                                 const Tensor& batch) {
    if (batch.cols() != arch.in_dim)
        throw DimensionError("batch " + batch.shape_str() +
                             " does not match input dimension " +
                             std::to_string(arch.in_dim));
    const std::size_t rows = batch.rows();
    std::vector<Tensor> block_out(arch.n);
    for (std::size_t j = 0; j < arch.n; ++j) {
        Tensor in;
        if (j == arch.input) {
            in = batch;
        } else {
            const std::vector<std::size_t> preds = arch.preds(j);
            in = block_out[preds[0]];
            for (std::size_t p = 1; p < preds.size(); ++p) {
                const Tensor& t = block_out[preds[p]];
                for (std::size_t i = 0; i < in.numel(); ++i) in[i] += t[i];
            }
        }
        const DenseLayer& l = params.blocks[j];
        Tensor z({rows, arch.width});
        kernels::matmul(in.data(), l.W.data(), z.data(), rows, in.cols(), arch.width);
        kernels::add_bias(z.data(), l.b.data(), z.data(), rows, arch.width);
        kernels::relu_forward(z.data(), z.data(), z.numel());
        block_out[j] = std::move(z);
    }
    std::vector<Tensor> logits(arch.n);
    for (std::size_t k = 0; k < arch.n; ++k) {
        const DenseLayer& l = params.heads[k];
        Tensor z({rows, arch.classes});
        kernels::matmul(block_out[k].data(), l.W.data(), z.data(), rows, arch.width,
                        arch.classes);
        kernels::add_bias(z.data(), l.b.data(), z.data(), rows, arch.classes);
        logits[k] = std::move(z);
    }
    return logits;
}

std::vector<Tensor> infer_logprobs(const ArchGraph& arch, const ModelParams& params,
                                   const Tensor& batch) {
    std::vector<Tensor> logits = infer_logits(arch, params, batch);
    for (Tensor& z : logits) {
        Tensor lp(z.shape);
        kernels::log_softmax_rows(z.data(), lp.data(), z.rows(), z.cols());
        z = std::move(lp);
    }
    return logits;
}

std::vector<double> head_weight_values(const Tensor& u) {
    const std::size_t n = u.numel();
    std::vector<double> w(n);
    double mx = u[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, u[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(u[i] - mx);
        sum += w[i];
    }
    for (std::size_t i = 0; i < n; ++i) w[i] /= sum;
    return w;
}

}  // namespace netcut
