#include "netcut/graph.hpp"

#include <algorithm>
#include <cmath>

#include "netcut/kernels.hpp"

namespace netcut {

Var CompGraph::push(Op op, std::vector<std::size_t> parents, Tensor value,
                    bool requires_grad, double alpha, std::vector<std::size_t> labels) {
    Node n;
    n.op = op;
    n.parents = std::move(parents);
    n.grad = Tensor::zeros(value.shape);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.alpha = alpha;
    n.labels = std::move(labels);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

void CompGraph::check_mine(Var v) const {
    if (v.g_ != this || v.id_ >= nodes_.size())
        throw ContractError("node handle does not belong to this graph");
}

const CompGraph::Node& CompGraph::node_of(Var v) const {
    check_mine(v);
    return nodes_[v.id_];
}

const Tensor& CompGraph::value(Var v) const { return node_of(v).value; }
const Tensor& CompGraph::grad(Var v) const { return node_of(v).grad; }

namespace {

void require_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2)
        throw DimensionError(std::string(what) + " expects a matrix, got " + t.shape_str());
}

}  // namespace

Var CompGraph::leaf(Tensor value, bool requires_grad) {
    return push(Op::Leaf, {}, std::move(value), requires_grad);
}

Var CompGraph::matmul(Var a, Var b) {
    const Node& na = node_of(a);
    const Node& nb = node_of(b);
    require_rank2(na.value, "matmul");
    require_rank2(nb.value, "matmul");
    if (na.value.cols() != nb.value.rows())
        throw DimensionError("matmul: inner extents differ, " + na.value.shape_str() +
                             " vs " + nb.value.shape_str());
    const std::size_t m = na.value.rows(), k = na.value.cols(), n = nb.value.cols();
    Tensor out({m, n});
    kernels::matmul(na.value.data(), nb.value.data(), out.data(), m, k, n);
    return push(Op::MatMul, {a.id_, b.id_}, std::move(out),
                na.requires_grad || nb.requires_grad);
}

Var CompGraph::add(Var a, Var b) {
    const Node& na = node_of(a);
    const Node& nb = node_of(b);
    if (!na.value.same_shape(nb.value))
        throw DimensionError("add: " + na.value.shape_str() + " vs " +
                             nb.value.shape_str());
    Tensor out(na.value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out[i] = na.value[i] + nb.value[i];
    return push(Op::Add, {a.id_, b.id_}, std::move(out),
                na.requires_grad || nb.requires_grad);
}

Var CompGraph::add_scaled(Var a, Var b, double alpha) {
    const Node& na = node_of(a);
    const Node& nb = node_of(b);
    if (!na.value.same_shape(nb.value))
        throw DimensionError("add_scaled: " + na.value.shape_str() + " vs " +
                             nb.value.shape_str());
    Tensor out(na.value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out[i] = na.value[i] + alpha * nb.value[i];
    return push(Op::AddScaled, {a.id_, b.id_}, std::move(out),
                na.requires_grad || nb.requires_grad, alpha);
}

Var CompGraph::scale(Var a, double alpha) {
    const Node& na = node_of(a);
    Tensor out(na.value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out[i] = alpha * na.value[i];
    return push(Op::Scale, {a.id_}, std::move(out), na.requires_grad, alpha);
}

Var CompGraph::add_bias(Var x, Var b) {
    const Node& nx = node_of(x);
    const Node& nb = node_of(b);
    require_rank2(nx.value, "add_bias");
    if (nb.value.numel() != nx.value.cols())
        throw DimensionError("add_bias: bias " + nb.value.shape_str() +
                             " does not span the columns of " + nx.value.shape_str());
    Tensor out(nx.value.shape);
    kernels::add_bias(nx.value.data(), nb.value.data(), out.data(), nx.value.rows(),
                      nx.value.cols());
    return push(Op::AddBias, {x.id_, b.id_}, std::move(out),
                nx.requires_grad || nb.requires_grad);
}

Var CompGraph::relu(Var x) {
    const Node& nx = node_of(x);
    Tensor out(nx.value.shape);
    kernels::relu_forward(nx.value.data(), out.data(), nx.value.numel());
    return push(Op::Relu, {x.id_}, std::move(out), nx.requires_grad);
}

Var CompGraph::log_softmax(Var z) {
    const Node& nz = node_of(z);
    if (!nz.value.all_finite())
        throw NumericError("log_softmax: non-finite input");
    const std::size_t rows = nz.value.rank() == 2 ? nz.value.rows() : 1;
    const std::size_t cols = nz.value.rank() == 2 ? nz.value.cols() : nz.value.numel();
    if (cols == 0) throw DimensionError("log_softmax: empty input");
    Tensor out(nz.value.shape);
    kernels::log_softmax_rows(nz.value.data(), out.data(), rows, cols);
    return push(Op::LogSoftmax, {z.id_}, std::move(out), nz.requires_grad);
}

Var CompGraph::naive_softmax(Var z) {
    const Node& nz = node_of(z);
    const std::size_t rows = nz.value.rank() == 2 ? nz.value.rows() : 1;
    const std::size_t cols = nz.value.rank() == 2 ? nz.value.cols() : nz.value.numel();
    if (cols == 0) throw DimensionError("naive_softmax: empty input");
    Tensor out(nz.value.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* zr = nz.value.data() + r * cols;
        double* or_ = out.data() + r * cols;
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            or_[j] = std::exp(zr[j]);  // no max shift: overflows for large logits
            sum += or_[j];
        }
        for (std::size_t j = 0; j < cols; ++j) or_[j] /= sum;
    }
    return push(Op::NaiveSoftmax, {z.id_}, std::move(out), nz.requires_grad);
}

Var CompGraph::softmax_vec(Var u) {
    const Node& nu = node_of(u);
    if (nu.value.rank() != 1)
        throw DimensionError("softmax_vec expects a vector, got " + nu.value.shape_str());
    if (!nu.value.all_finite()) throw NumericError("softmax_vec: non-finite input");
    const std::size_t n = nu.value.numel();
    Tensor out(nu.value.shape);
    double mx = nu.value[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, nu.value[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(nu.value[i] - mx);
        sum += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
    return push(Op::SoftmaxVec, {u.id_}, std::move(out), nu.requires_grad);
}

Var CompGraph::weighted_sum(const std::vector<Var>& terms, Var w) {
    const Node& nw = node_of(w);
    if (terms.empty()) throw DimensionError("weighted_sum: no terms");
    if (nw.value.rank() != 1 || nw.value.numel() != terms.size())
        throw DimensionError("weighted_sum: weight vector " + nw.value.shape_str() +
                             " does not match " + std::to_string(terms.size()) +
                             " terms");
    bool rg = nw.requires_grad;
    const Tensor& first = node_of(terms[0]).value;
    for (const Var& t : terms) {
        const Node& nt = node_of(t);
        if (!nt.value.same_shape(first))
            throw DimensionError("weighted_sum: term shapes " + first.shape_str() +
                                 " vs " + nt.value.shape_str());
        rg = rg || nt.requires_grad;
    }
    Tensor out = Tensor::zeros(first.shape);
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const Tensor& tk = node_of(terms[k]).value;
        const double wk = nw.value[k];
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += wk * tk[i];
    }
    std::vector<std::size_t> parents;
    parents.reserve(terms.size() + 1);
    for (const Var& t : terms) parents.push_back(t.id_);
    parents.push_back(w.id_);
    return push(Op::WeightedSum, std::move(parents), std::move(out), rg);
}

Var CompGraph::weighted_logsumexp(const std::vector<Var>& terms, Var w) {
    const Node& nw = node_of(w);
    if (terms.empty()) throw DimensionError("weighted_logsumexp: no terms");
    if (nw.value.rank() != 1 || nw.value.numel() != terms.size())
        throw DimensionError("weighted_logsumexp: weight vector " + nw.value.shape_str() +
                             " does not match " + std::to_string(terms.size()) +
                             " terms");
    bool rg = nw.requires_grad;
    const Tensor& first = node_of(terms[0]).value;
    for (const Var& t : terms) {
        const Node& nt = node_of(t);
        if (!nt.value.same_shape(first))
            throw DimensionError("weighted_logsumexp: term shapes " + first.shape_str() +
                                 " vs " + nt.value.shape_str());
        rg = rg || nt.requires_grad;
    }
    Tensor out(first.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double mx = node_of(terms[0]).value[i];
        for (std::size_t k = 1; k < terms.size(); ++k)
            mx = std::max(mx, node_of(terms[k]).value[i]);
        double s = 0.0;
        for (std::size_t k = 0; k < terms.size(); ++k)
            s += nw.value[k] * std::exp(node_of(terms[k]).value[i] - mx);
        out[i] = mx + std::log(s);
    }
    std::vector<std::size_t> parents;
    parents.reserve(terms.size() + 1);
    for (const Var& t : terms) parents.push_back(t.id_);
    parents.push_back(w.id_);
    return push(Op::WeightedLogSumExp, std::move(parents), std::move(out), rg);
}

Var CompGraph::log(Var x) {
    const Node& nx = node_of(x);
    Tensor out(nx.value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::log(nx.value[i]);
    return push(Op::Log, {x.id_}, std::move(out), nx.requires_grad);
}

Var CompGraph::pick_nll(Var logp, std::vector<std::size_t> labels) {
    const Node& np = node_of(logp);
    require_rank2(np.value, "pick_nll");
    if (labels.size() != np.value.rows())
        throw DimensionError("pick_nll: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(np.value.rows()) + " rows");
    const std::size_t cols = np.value.cols();
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= cols)
            throw IndexError("pick_nll: label " + std::to_string(labels[i]) +
                             " out of range for " + std::to_string(cols) + " classes");
        acc -= np.value.at(i, labels[i]);
    }
    acc /= static_cast<double>(labels.size());
    return push(Op::PickNll, {logp.id_}, Tensor::scalar(acc), np.requires_grad, 0.0,
                std::move(labels));
}

Var CompGraph::dot(Var a, Var b) {
    const Node& na = node_of(a);
    const Node& nb = node_of(b);
    if (na.value.numel() != nb.value.numel())
        throw DimensionError("dot: " + na.value.shape_str() + " vs " +
                             nb.value.shape_str());
    double acc = 0.0;
    for (std::size_t i = 0; i < na.value.numel(); ++i) acc += na.value[i] * nb.value[i];
    return push(Op::Dot, {a.id_, b.id_}, Tensor::scalar(acc),
                na.requires_grad || nb.requires_grad);
}

Var CompGraph::sum(Var x) {
    const Node& nx = node_of(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < nx.value.numel(); ++i) acc += nx.value[i];
    return push(Op::Sum, {x.id_}, Tensor::scalar(acc), nx.requires_grad);
}

Var CompGraph::stop_grad(Var x) {
    const Node& nx = node_of(x);
    return push(Op::StopGrad, {x.id_}, nx.value, false);
}

void CompGraph::zero_grad() {
    for (Node& n : nodes_)
        std::fill(n.grad.values.begin(), n.grad.values.end(), 0.0);
}

void CompGraph::backward(Var loss) {
    check_mine(loss);
    if (nodes_[loss.id_].value.numel() != 1)
        throw ContractError("backward requires a scalar loss, got " +
                            nodes_[loss.id_].value.shape_str());
    nodes_[loss.id_].grad[0] += 1.0;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
        if (nodes_[i].requires_grad) propagate(i);
    }
}

void CompGraph::propagate(std::size_t i) {
    Node& n = nodes_[i];
    const Tensor& g = n.grad;
    switch (n.op) {
        case Op::Leaf:
        case Op::StopGrad:
            return;
        case Op::MatMul: {
            Node& a = nodes_[n.parents[0]];
            Node& b = nodes_[n.parents[1]];
            const std::size_t m = a.value.rows(), k = a.value.cols(), c = b.value.cols();
            if (a.requires_grad)
                kernels::matmul_nt(g.data(), b.value.data(), a.grad.data(), m, c, k, true);
            if (b.requires_grad)
                kernels::matmul_tn(a.value.data(), g.data(), b.grad.data(), k, m, c, true);
            return;
        }
        case Op::Add: {
            for (int p = 0; p < 2; ++p) {
                Node& t = nodes_[n.parents[p]];
                if (!t.requires_grad) continue;
                for (std::size_t j = 0; j < g.numel(); ++j) t.grad[j] += g[j];
            }
            return;
        }
        case Op::AddScaled: {
            Node& a = nodes_[n.parents[0]];
            Node& b = nodes_[n.parents[1]];
            if (a.requires_grad)
                for (std::size_t j = 0; j < g.numel(); ++j) a.grad[j] += g[j];
            if (b.requires_grad)
                for (std::size_t j = 0; j < g.numel(); ++j) b.grad[j] += n.alpha * g[j];
            return;
        }
        case Op::Scale: {
            Node& a = nodes_[n.parents[0]];
            if (a.requires_grad)
                for (std::size_t j = 0; j < g.numel(); ++j) a.grad[j] += n.alpha * g[j];
            return;
        }
        case Op::AddBias: {
            Node& x = nodes_[n.parents[0]];
            Node& b = nodes_[n.parents[1]];
            if (x.requires_grad)
                for (std::size_t j = 0; j < g.numel(); ++j) x.grad[j] += g[j];
            if (b.requires_grad)
                kernels::col_sum(g.data(), b.grad.data(), n.value.rows(), n.value.cols(),
                                 true);
            return;
        }
        case Op::Relu: {
            Node& x = nodes_[n.parents[0]];
            if (x.requires_grad)
                kernels::relu_backward(x.value.data(), g.data(), x.grad.data(), g.numel(),
                                       true);
            return;
        }
        case Op::LogSoftmax: {
            Node& z = nodes_[n.parents[0]];
            if (!z.requires_grad) return;
            const std::size_t rows = n.value.rank() == 2 ? n.value.rows() : 1;
            const std::size_t cols = n.value.rank() == 2 ? n.value.cols() : n.value.numel();
            kernels::log_softmax_backward_rows(n.value.data(), g.data(), z.grad.data(),
                                               rows, cols, true);
            return;
        }
        case Op::NaiveSoftmax:
        case Op::SoftmaxVec: {
            Node& z = nodes_[n.parents[0]];
            if (!z.requires_grad) return;
            const std::size_t rows = n.op == Op::SoftmaxVec || n.value.rank() != 2
                                         ? 1
                                         : n.value.rows();
            const std::size_t cols = n.value.numel() / rows;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* pr = n.value.data() + r * cols;
                const double* gr = g.data() + r * cols;
                double* dz = z.grad.data() + r * cols;
                double s = 0.0;
                for (std::size_t j = 0; j < cols; ++j) s += gr[j] * pr[j];
                for (std::size_t j = 0; j < cols; ++j) dz[j] += pr[j] * (gr[j] - s);
            }
            return;
        }
        case Op::WeightedSum: {
            const std::size_t nterms = n.parents.size() - 1;
            Node& w = nodes_[n.parents[nterms]];
            for (std::size_t k = 0; k < nterms; ++k) {
                Node& t = nodes_[n.parents[k]];
                const double wk = w.value[k];
                if (t.requires_grad)
                    for (std::size_t j = 0; j < g.numel(); ++j) t.grad[j] += wk * g[j];
                if (w.requires_grad) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < g.numel(); ++j) acc += g[j] * t.value[j];
                    w.grad[k] += acc;
                }
            }
            return;
        }
        case Op::WeightedLogSumExp: {
            const std::size_t nterms = n.parents.size() - 1;
            Node& w = nodes_[n.parents[nterms]];
            for (std::size_t k = 0; k < nterms; ++k) {
                Node& t = nodes_[n.parents[k]];
                const double wk = w.value[k];
                if (t.requires_grad)
                    for (std::size_t j = 0; j < g.numel(); ++j)
                        t.grad[j] += g[j] * wk * std::exp(t.value[j] - n.value[j]);
                if (w.requires_grad) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < g.numel(); ++j)
                        acc += g[j] * std::exp(t.value[j] - n.value[j]);
                    w.grad[k] += acc;
                }
            }
            return;
        }
        case Op::Log: {
            Node& x = nodes_[n.parents[0]];
            if (x.requires_grad)
                for (std::size_t j = 0; j < g.numel(); ++j) x.grad[j] += g[j] / x.value[j];
            return;
        }
        case Op::PickNll: {
            Node& p = nodes_[n.parents[0]];
            if (!p.requires_grad) return;
            const double gy = -g[0] / static_cast<double>(n.labels.size());
            for (std::size_t r = 0; r < n.labels.size(); ++r)
                p.grad.at(r, n.labels[r]) += gy;
            return;
        }
        case Op::Dot: {
            Node& a = nodes_[n.parents[0]];
            Node& b = nodes_[n.parents[1]];
            if (a.requires_grad)
                for (std::size_t j = 0; j < a.value.numel(); ++j)
                    a.grad[j] += g[0] * b.value[j];
            if (b.requires_grad)
                for (std::size_t j = 0; j < b.value.numel(); ++j)
                    b.grad[j] += g[0] * a.value[j];
            return;
        }
        case Op::Sum: {
            Node& x = nodes_[n.parents[0]];
            if (x.requires_grad)
                for (std::size_t j = 0; j < x.value.numel(); ++j) x.grad[j] += g[0];
            return;
        }
    }
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h) {
    Tensor g(x.shape);
    Tensor probe = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double hi = f(probe);
        probe[i] = saved - h;
        const double lo = f(probe);
        probe[i] = saved;
        g[i] = (hi - lo) / (2.0 * h);
    }
    return g;
}

}  // namespace netcut
