#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "netcut/aggregate.hpp"
#include "netcut/model.hpp"
#include "netcut/rng.hpp"

using namespace netcut;

namespace {

// log-prob rows from plain probability rows
Tensor logp_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<double> flat;
    std::size_t cols = 0;
    for (const auto& r : rows) {
        cols = r.size();
        for (double p : r) flat.push_back(std::log(p));
    }
    return Tensor({rows.size(), cols}, std::move(flat));
}

// a random point on the simplex and matching random head log-prob rows
struct RandomCase {
    Tensor u;
    std::vector<Tensor> logps;
};

RandomCase random_case(std::size_t n_heads, std::size_t rows, std::size_t classes,
                       Rng& rng) {
    RandomCase rc;
    rc.u = Tensor({n_heads});
    for (double& v : rc.u.values) v = rng.uniform(-2.0, 2.0);
    for (std::size_t k = 0; k < n_heads; ++k) {
        Tensor z({rows, classes});
        for (double& v : z.values) v = rng.uniform(-3.0, 3.0);
        CompGraph g;
        rc.logps.push_back(g.log_softmax(g.constant(z)).value());
    }
    return rc;
}

}  // namespace

TEST_CASE("head weights are a softmax of u") {
    CompGraph g;
    const Var w0 = head_weights(g, g.constant(Tensor::vec({0, 0, 0, 0})));
    for (double v : w0.value().values) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

    const Var w1 = head_weights(g, g.constant(Tensor::vec({10, 0, 0, 0, 0})));
    CHECK(w1.value()[0] == doctest::Approx(0.99982).epsilon(1e-4));

    // shift invariance
    const Tensor u = Tensor::vec({0.3, -1.1, 0.8});
    Tensor shifted = u;
    for (double& v : shifted.values) v += 5.0;
    const Var a = head_weights(g, g.constant(u));
    const Var b = head_weights(g, g.constant(shifted));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::abs(a.value()[i] - b.value()[i]) < 1e-12);

    // simplex invariant
    double s = 0.0;
    for (double v : a.value().values) {
        CHECK(v > 0.0);
        s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log aggregation with one-hot w returns that head exactly") {
    CompGraph g;
    const std::vector<Var> heads = {
        g.constant(logp_rows({{0.5, 0.5}})),
        g.constant(logp_rows({{0.9, 0.1}})),
    };
    const Var w = g.constant(Tensor::vec({0.0, 1.0}));
    const Var agg = aggregate_log(g, heads, w);
    CHECK(agg.value().values == heads[1].value().values);
}

TEST_CASE("log aggregation of identical heads is that value for any w") {
    CompGraph g;
    const Tensor common = logp_rows({{0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}});
    const std::vector<Var> heads = {g.constant(common), g.constant(common),
                                    g.constant(common)};
    const Var w = g.constant(Tensor::vec({0.2, 0.5, 0.3}));
    const Var agg = aggregate_log(g, heads, w);
    for (std::size_t i = 0; i < common.numel(); ++i)
        CHECK(agg.value()[i] == doctest::Approx(common[i]).epsilon(1e-12));
}

TEST_CASE("the worked half-half example shows the Jensen gap") {
    CompGraph g;
    const std::vector<Var> heads = {
        g.constant(logp_rows({{0.5, 0.5}})),
        g.constant(logp_rows({{0.9, 0.1}})),
    };
    const Var w = g.constant(Tensor::vec({0.5, 0.5}));

    const Var lg = aggregate_log(g, heads, w);
    const double o1 = std::exp(lg.value()[0]);
    const double o2 = std::exp(lg.value()[1]);
    CHECK(o1 == doctest::Approx(0.6708).epsilon(1e-4));
    CHECK(o2 == doctest::Approx(0.2236).epsilon(1e-4));
    CHECK(o1 + o2 == doctest::Approx(0.8944).epsilon(1e-4));
    CHECK(o1 + o2 < 1.0);

    // class 0 as the true class -> loss = -ln 0.6708
    const Var loss = class_loss(g, lg, std::vector<std::size_t>{0});
    CHECK(loss.value()[0] == doctest::Approx(0.3993).epsilon(1e-3));

    // probability averaging on the same inputs is the affine average
    const Var lp = aggregate_prob(g, heads, w);
    CHECK(std::exp(lp.value()[0]) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(std::exp(lp.value()[1]) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(std::exp(lp.value()[0]) + std::exp(lp.value()[1]) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Jensen bound holds for random draws, equality only for one-hot w") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const RandomCase rc = random_case(4, 3, 5, rng);
        CompGraph g;
        std::vector<Var> heads;
        for (const Tensor& t : rc.logps) heads.push_back(g.constant(t));
        const Var w = head_weights(g, g.constant(rc.u));
        const Var agg = aggregate_log(g, heads, w);
        for (std::size_t r = 0; r < 3; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < 5; ++c) s += std::exp(agg.value().at(r, c));
            CHECK(s <= 1.0 + 1e-12);
        }
    }

    // one-hot w: equality
    CompGraph g;
    Rng rng2(100);
    const RandomCase rc = random_case(3, 2, 4, rng2);
    std::vector<Var> heads;
    for (const Tensor& t : rc.logps) heads.push_back(g.constant(t));
    const Var onehot = g.constant(Tensor::vec({1.0, 0.0, 0.0}));
    const Var agg = aggregate_log(g, heads, onehot);
    for (std::size_t r = 0; r < 2; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 4; ++c) s += std::exp(agg.value().at(r, c));
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("naive probability averaging overflows on large logits") {
    CompGraph g;
    const std::vector<Var> logits = {
        g.constant(Tensor({1, 2}, {1e4, 0.0})),
        g.constant(Tensor({1, 2}, {0.0, 1e4})),
    };
    const Var w = g.constant(Tensor::vec({0.5, 0.5}));
    const Var agg = aggregate_prob_naive(g, logits, w);
    CHECK_FALSE(agg.value().all_finite());

    // the stable path on equivalent inputs stays finite
    CompGraph g2;
    std::vector<Var> lps;
    for (const Tensor& z : {Tensor({1, 2}, {1e4, 0.0}), Tensor({1, 2}, {0.0, 1e4})})
        lps.push_back(g2.log_softmax(g2.constant(z)));
    const Var stable = aggregate_prob(g2, lps, g2.constant(Tensor::vec({0.5, 0.5})));
    CHECK(stable.value().all_finite());
}

TEST_CASE("class_loss basics and the one-hot overload") {
    CompGraph g;
    // true class at probability 1 -> loss 0
    const Var sure = g.constant(Tensor({1, 2}, {0.0, -50.0}));
    CHECK(class_loss(g, sure, std::vector<std::size_t>{0}).value()[0] ==
          doctest::Approx(0.0).epsilon(1e-12));

    // uniform over C classes -> ln C
    const std::size_t C = 7;
    Tensor uni({2, C});
    for (double& v : uni.values) v = -std::log(double(C));
    const Var u = g.constant(uni);
    CHECK(class_loss(g, u, std::vector<std::size_t>{3, 0}).value()[0] ==
          doctest::Approx(std::log(double(C))).epsilon(1e-12));

    // one-hot tensor form agrees with the label form
    Tensor y({2, C});
    y.at(0, 3) = 1.0;
    y.at(1, 0) = 1.0;
    CHECK(class_loss(g, u, y).value()[0] ==
          class_loss(g, u, std::vector<std::size_t>{3, 0}).value()[0]);

    // malformed one-hot rows
    Tensor two({1, 3}, {1.0, 1.0, 0.0});
    CHECK_THROWS_AS(class_loss(g, g.constant(Tensor({1, 3})), two), LabelError);
    Tensor frac({1, 3}, {0.5, 0.5, 0.0});
    CHECK_THROWS_AS(class_loss(g, g.constant(Tensor({1, 3})), frac), LabelError);
    Tensor wrong_shape({2, 2}, {1, 0, 0, 1});
    CHECK_THROWS_AS(class_loss(g, g.constant(Tensor({1, 3})), wrong_shape),
                    DimensionError);
}

TEST_CASE("time_reg is the cost dot product") {
    CompGraph g;
    const Var uniform = g.constant(Tensor::vec({0.25, 0.25, 0.25, 0.25}));
    CHECK(time_reg(g, uniform, {1, 2, 3, 4}).value()[0] ==
          doctest::Approx(2.5).epsilon(1e-12));

    const Var onehot = g.constant(Tensor::vec({0, 0, 1, 0}));
    CHECK(time_reg(g, onehot, {1, 2, 3, 4}).value()[0] ==
          doctest::Approx(3.0).epsilon(1e-12));

    // diamond DAG edge costs
    CHECK(time_reg(g, uniform, {0, 1, 1, 4}).value()[0] ==
          doctest::Approx(1.5).epsilon(1e-12));

    CHECK_THROWS_AS(time_reg(g, uniform, {1, 2}), DimensionError);
    CHECK_THROWS_AS(time_reg(g, uniform, {1, 2, 3, -1}), ConfigError);
}

TEST_CASE("total_loss composes the two terms") {
    CompGraph g;
    const Var c = g.constant(Tensor::scalar(0.5));
    const Var r = g.constant(Tensor::scalar(2.5));
    CHECK(total_loss(g, c, r, 0.0).value()[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(total_loss(g, c, r, 0.01).value()[0] ==
          doctest::Approx(0.525).epsilon(1e-12));
    CHECK_THROWS_AS(total_loss(g, c, r, -0.1), ConfigError);
}

TEST_CASE("gradient of the total loss w.r.t. u matches finite differences") {
    Rng rng(7);
    const RandomCase rc = random_case(4, 6, 3, rng);
    const std::vector<std::size_t> labels = {0, 2, 1, 0, 1, 2};
    const std::vector<double> costs = {1, 2, 3, 4};
    const double beta = 0.05;

    CompGraph g;
    std::vector<Var> heads;
    for (const Tensor& t : rc.logps) heads.push_back(g.constant(t));
    const Var u = g.leaf(rc.u);
    const Var w = head_weights(g, u);
    const Var agg = aggregate_log(g, heads, w);
    g.backward(total_loss(g, class_loss(g, agg, labels), time_reg(g, w, costs), beta));

    const Tensor fd = finite_diff_grad(
        [&](const Tensor& uu) {
            CompGraph gg;
            std::vector<Var> hs;
            for (const Tensor& t : rc.logps) hs.push_back(gg.constant(t));
            const Var ww = head_weights(gg, gg.leaf(uu));
            const Var ag = aggregate_log(gg, hs, ww);
            return total_loss(gg, class_loss(gg, ag, labels), time_reg(gg, ww, costs),
                              beta)
                .value()[0];
        },
        rc.u);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(u.grad()[i] == doctest::Approx(fd[i]).epsilon(1e-6));

    // beta pulls u toward cheaper heads: the regularizer's contribution to
    // du_k is beta * w_k (cost_k - sum_j w_j cost_j), positive for costly heads
    const std::vector<double> wv = head_weight_values(rc.u);
    double mean_cost = 0.0;
    for (std::size_t k = 0; k < 4; ++k) mean_cost += wv[k] * costs[k];
    const Tensor fd0 = finite_diff_grad(
        [&](const Tensor& uu) {
            CompGraph gg;
            std::vector<Var> hs;
            for (const Tensor& t : rc.logps) hs.push_back(gg.constant(t));
            const Var ww = head_weights(gg, gg.leaf(uu));
            const Var ag = aggregate_log(gg, hs, ww);
            return total_loss(gg, class_loss(gg, ag, labels), time_reg(gg, ww, costs),
                              0.0)
                .value()[0];
        },
        rc.u);
    for (std::size_t k = 0; k < 4; ++k) {
        const double reg_pull = (u.grad()[k] - fd0[k]) / beta;
        CHECK(reg_pull ==
              doctest::Approx(wv[k] * (costs[k] - mean_cost)).epsilon(1e-4));
    }
}

TEST_CASE("weighted cross-entropy identity") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const RandomCase rc = random_case(3, 4, 5, rng);
        const std::vector<std::size_t> labels = {1, 0, 4, 2};

        CompGraph g;
        std::vector<Var> heads;
        for (const Tensor& t : rc.logps) heads.push_back(g.constant(t));
        const Var w = head_weights(g, g.constant(rc.u));
        const Var agg = aggregate_log(g, heads, w);
        const double lhs = class_loss(g, agg, labels).value()[0];

        double rhs = 0.0;
        const std::vector<double> wv = head_weight_values(rc.u);
        for (std::size_t k = 0; k < 3; ++k)
            rhs += wv[k] * class_loss(g, heads[k], labels).value()[0];
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("adding a constant to every cost does not reorder the head pulls") {
    const Tensor u = Tensor::vec({0.5, -0.3, 0.1});
    const std::vector<double> costs = {1, 2, 3};
    const std::vector<double> shifted = {11, 12, 13};

    const auto reg_grad = [&](const std::vector<double>& cs) {
        CompGraph g;
        const Var uv = g.leaf(u);
        g.backward(time_reg(g, head_weights(g, uv), cs));
        return uv.grad();
    };
    const Tensor g1 = reg_grad(costs);
    const Tensor g2 = reg_grad(shifted);
    // same ordering of per-head pulls in both cases
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            CHECK((g1[a] < g1[b]) == (g2[a] < g2[b]));
}
