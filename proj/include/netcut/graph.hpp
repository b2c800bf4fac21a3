#pragma once

#include <functional>
#include <vector>

#include "netcut/tensor.hpp"

namespace netcut {

class CompGraph;

// Handle to one node on a CompGraph tape.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Tensor& grad() const;
    std::size_t id() const { return id_; }
    bool valid() const { return g_ != nullptr; }

private:
    friend class CompGraph;
    Var(CompGraph* g, std::size_t id) : g_(g), id_(id) {}

    CompGraph* g_ = nullptr;
    std::size_t id_ = 0;
};

// Define-by-run reverse-mode tape. Nodes are append-only and parents always
// precede children, so insertion order is a topological order. Gradient
// accumulators start at zero and backward() adds into them, which makes the
// adjoint of a tensor feeding several consumers come out additive; call
// zero_grad() between independent backward passes.
class CompGraph {
public:
    // tape entry points
    Var leaf(Tensor value, bool requires_grad = true);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    // linear algebra
    Var matmul(Var a, Var b);           // [m x k] * [k x n]
    Var add(Var a, Var b);              // same shape
    Var add_scaled(Var a, Var b, double alpha);  // a + alpha * b
    Var scale(Var a, double alpha);
    Var add_bias(Var x, Var b);         // rows of x plus vector b

    // nonlinearities
    Var relu(Var x);
    Var log_softmax(Var z);             // row-wise, max-shifted; rejects non-finite input
    Var naive_softmax(Var z);           // row-wise, no max shift; overflow propagates
    Var softmax_vec(Var u);             // one vector

    // aggregation primitives
    Var weighted_sum(const std::vector<Var>& terms, Var w);         // sum_k w[k] * T_k
    Var weighted_logsumexp(const std::vector<Var>& terms, Var w);   // ln sum_k w[k] exp(T_k)
    Var log(Var x);                     // elementwise ln

    // reductions
    Var pick_nll(Var logp, std::vector<std::size_t> labels);  // mean_i of -logp[i, y_i]
    Var dot(Var a, Var b);              // vectors -> scalar
    Var sum(Var x);                     // all elements -> scalar

    Var stop_grad(Var x);               // value passes, gradient does not

    // Seeds d(loss)/d(loss) = 1 and accumulates adjoints into every node's
    // gradient; loss must be scalar.
    void backward(Var loss);
    void zero_grad();

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op {
        Leaf,
        MatMul,
        Add,
        AddScaled,
        Scale,
        AddBias,
        Relu,
        LogSoftmax,
        NaiveSoftmax,
        SoftmaxVec,
        WeightedSum,
        WeightedLogSumExp,
        Log,
        PickNll,
        Dot,
        Sum,
        StopGrad,
    };

    struct Node {
        Op op;
        std::vector<std::size_t> parents;
        Tensor value;
        Tensor grad;
        bool requires_grad;
        double alpha = 0.0;                 // Scale / AddScaled coefficient
        std::vector<std::size_t> labels;    // PickNll targets
    };

    Var push(Op op, std::vector<std::size_t> parents, Tensor value, bool requires_grad,
             double alpha = 0.0, std::vector<std::size_t> labels = {});
    const Node& node_of(Var v) const;
    void check_mine(Var v) const;
    void propagate(std::size_t i);

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return g_->value(*this); }
inline const Tensor& Var::grad() const { return g_->grad(*this); }

// Central-difference gradient oracle: ((f(x + h*e_i) - f(x - h*e_i)) / 2h)_i.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h = 1e-5);

}  // namespace netcut
