#include "netcut/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "netcut/adam.hpp"
#include "netcut/aggregate.hpp"
#include "netcut/rng.hpp"

namespace netcut {

Scheme parse_scheme(const std::string& name) {
    if (name == "log") return Scheme::Log;
    if (name == "prob") return Scheme::Prob;
    if (name == "prob-naive") return Scheme::ProbNaive;
    throw ConfigError("unknown aggregation scheme '" + name +
                      "' (expected log, prob or prob-naive)");
}

InitScheme parse_init_scheme(const std::string& name) {
    if (name == "uniform") return InitScheme::Uniform;
    if (name == "first") return InitScheme::First;
    if (name == "last") return InitScheme::Last;
    throw ConfigError("unknown init scheme '" + name +
                      "' (expected uniform, first or last)");
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Log: return "log";
        case Scheme::Prob: return "prob";
        case Scheme::ProbNaive: return "prob-naive";
    }
    return "?";
}

std::string init_scheme_name(InitScheme s) {
    switch (s) {
        case InitScheme::Uniform: return "uniform";
        case InitScheme::First: return "first";
        case InitScheme::Last: return "last";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (head_lr < 0.0) throw ConfigError("head learning rate must be non-negative");
    if (beta < 0.0) throw ConfigError("beta must be non-negative");
    if (init_kappa < 0.0) throw ConfigError("init kappa must be non-negative");
    if (param_scale <= 0.0) throw ConfigError("param scale must be positive");
}

Tensor init_head_weights(InitScheme scheme, std::size_t n, double kappa) {
    if (n == 0) throw ConfigError("head weights need at least one head");
    Tensor u({n});
    switch (scheme) {
        case InitScheme::Uniform: break;
        case InitScheme::First: u[0] = kappa; break;
        case InitScheme::Last: u[n - 1] = kappa; break;
    }
    return u;
}

namespace {

// plain (tape-free) aggregation over per-head log-probs; mirrors the tape ops
Tensor aggregate_plain(const std::vector<Tensor>& logps, const std::vector<double>& w,
                       Scheme scheme) {
    Tensor out = Tensor::zeros(logps[0].shape);
    if (scheme == Scheme::Log) {
        for (std::size_t k = 0; k < logps.size(); ++k)
            for (std::size_t i = 0; i < out.numel(); ++i)
                out[i] += w[k] * logps[k][i];
    } else {
        for (std::size_t i = 0; i < out.numel(); ++i) {
            double mx = logps[0][i];
            for (std::size_t k = 1; k < logps.size(); ++k)
                mx = std::max(mx, logps[k][i]);
            double s = 0.0;
            for (std::size_t k = 0; k < logps.size(); ++k)
                s += w[k] * std::exp(logps[k][i] - mx);
            out[i] = mx + std::log(s);
        }
    }
    return out;
}

std::size_t argmax_row(const Tensor& t, std::size_t r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < t.cols(); ++c)
        if (t.at(r, c) > t.at(r, best)) best = c;
    return best;
}

struct GradRefs {
    std::vector<const Tensor*> grads;
};

GradRefs collect_grads(const BoundParams& bound) {
    GradRefs g;
    for (std::size_t j = 0; j < bound.block_W.size(); ++j) {
        g.grads.push_back(&bound.block_W[j].grad());
        g.grads.push_back(&bound.block_b[j].grad());
    }
    for (std::size_t j = 0; j < bound.head_W.size(); ++j) {
        g.grads.push_back(&bound.head_W[j].grad());
        g.grads.push_back(&bound.head_b[j].grad());
    }
    g.grads.push_back(&bound.u.grad());
    return g;
}

}  // namespace

EvalResult evaluate(const ArchGraph& arch, const ModelParams& params,
                    const Dataset& ds, Scheme scheme) {
    const std::size_t chunk = 512;
    const std::vector<double> w = head_weight_values(params.u);
    EvalResult res;
    res.head_ce.assign(arch.n, 0.0);
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < ds.n(); start += chunk) {
        const std::size_t stop = std::min(ds.n(), start + chunk);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const Tensor Xc = gather_rows(ds.X, idx);
        const std::vector<Tensor> logps = infer_logprobs(arch, params, Xc);
        const Tensor agg = aggregate_plain(logps, w, scheme);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const std::size_t y = ds.y[idx[r]];
            if (argmax_row(agg, r) == y) ++correct;
            loss_sum -= agg.at(r, y);
            for (std::size_t k = 0; k < arch.n; ++k)
                res.head_ce[k] -= logps[k].at(r, y);
        }
    }
    const double n = static_cast<double>(ds.n());
    res.accuracy = static_cast<double>(correct) / n;
    res.mean_loss = loss_sum / n;
    for (double& ce : res.head_ce) ce /= n;
    return res;
}

TrainResult train(const ArchGraph& arch, const Dataset& train_ds,
                  const Dataset& test_ds, const TrainConfig& cfg) {
    cfg.validate();
    train_ds.validate();
    test_ds.validate();
    if (arch.in_dim != train_ds.dim() || arch.classes != train_ds.classes)
        throw DimensionError("architecture expects " + std::to_string(arch.in_dim) +
                             " features / " + std::to_string(arch.classes) +
                             " classes; dataset has " + std::to_string(train_ds.dim()) +
                             " / " + std::to_string(train_ds.classes));
    if (test_ds.dim() != train_ds.dim() || test_ds.classes != train_ds.classes)
        throw DimensionError("train and test datasets disagree on shape");

    TrainResult result;
    result.params = init_params(arch, cfg.param_scale, Rng::derive(cfg.seed, 1));
    result.params.u = init_head_weights(cfg.init, arch.n, cfg.init_kappa);
    ModelParams& params = result.params;

    const std::vector<double> costs = reg_costs(arch);
    std::vector<Tensor*> tensors = params.tensors();
    std::vector<double> lrs(tensors.size(), cfg.learning_rate);
    lrs.back() = cfg.head_lr;  // u is last
    Adam opt(tensors, lrs);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto batch_list =
            batches(train_ds.n(), cfg.batch_size, Rng::derive(cfg.seed, 1000 + epoch));
        double loss_sum = 0.0;
        bool nan_hit = false;
        for (const auto& idx : batch_list) {
            CompGraph g;
            const BoundParams bound = bind_params(g, params);
            const Var Xb = g.constant(gather_rows(train_ds.X, idx));
            const std::vector<std::size_t> yb = gather_labels(train_ds.y, idx);

            double batch_loss = std::numeric_limits<double>::quiet_NaN();
            bool step_ok = false;
            try {
                const std::vector<Var> logits = forward_logits(g, arch, bound, Xb);
                const Var w = head_weights(g, bound.u);
                Var agg;
                if (cfg.scheme == Scheme::ProbNaive) {
                    agg = aggregate_prob_naive(g, logits, w);
                } else {
                    std::vector<Var> logps = logits;
                    for (Var& z : logps) z = g.log_softmax(z);
                    agg = cfg.scheme == Scheme::Log ? aggregate_log(g, logps, w)
                                                    : aggregate_prob(g, logps, w);
                }
                const Var loss = total_loss(g, class_loss(g, agg, yb),
                                            time_reg(g, w, costs), cfg.beta);
                batch_loss = loss.value()[0];
                if (std::isfinite(batch_loss)) {
                    g.backward(loss);
                    step_ok = opt.step(collect_grads(bound).grads);
                }
            } catch (const NumericError&) {
                if (cfg.scheme == Scheme::Log) throw;
                // a prob-scheme forward blew up; fall through to the halt path
            }
            if (!std::isfinite(batch_loss) || !step_ok) {
                if (cfg.scheme == Scheme::Log)
                    throw NumericError(
                        "non-finite loss or gradient under scheme log at epoch " +
                        std::to_string(epoch));
                nan_hit = true;
                break;
            }
            loss_sum += batch_loss * static_cast<double>(idx.size());
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.w = head_weight_values(params.u);
        const EvalResult tr = evaluate(arch, params, train_ds, cfg.scheme);
        const EvalResult te = evaluate(arch, params, test_ds, cfg.scheme);
        rec.train_acc = tr.accuracy;
        rec.test_acc = te.accuracy;
        rec.head_ce = tr.head_ce;
        if (nan_hit) {
            rec.train_loss = std::numeric_limits<double>::quiet_NaN();
            result.log.records.push_back(std::move(rec));
            result.log.halted = true;
            result.log.halt_epoch = epoch;
            return result;
        }
        rec.train_loss = loss_sum / static_cast<double>(train_ds.n());
        result.log.records.push_back(std::move(rec));
    }
    return result;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
    if (log.records.empty()) throw ContractError("trajectory has no epochs");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    const std::size_t n = log.records.front().w.size();
    out << "epoch,train_loss,train_acc,test_acc";
    for (std::size_t k = 1; k <= n; ++k) out << ",w_" << k;
    for (std::size_t k = 1; k <= n; ++k) out << ",ce_" << k;
    out << "\n";
    for (const EpochRecord& r : log.records) {
        out << r.epoch << ',' << fmt_double(r.train_loss) << ','
            << fmt_double(r.train_acc) << ',' << fmt_double(r.test_acc);
        for (double v : r.w) out << ',' << fmt_double(v);
        for (double v : r.head_ce) out << ',' << fmt_double(v);
        out << "\n";
    }
    if (!out) throw ConfigError("failed writing " + path);
}

std::vector<double> TrajectoryTable::w_row(std::size_t r) const {
    std::vector<double> w(heads);
    for (std::size_t k = 0; k < heads; ++k) w[k] = rows[r][4 + k];
    return w;
}

TrajectoryTable read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    TrajectoryTable t;
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw FormatError(path + ": empty trajectory file");
    {
        std::istringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) t.columns.push_back(col);
    }
    static const char* kFixed[4] = {"epoch", "train_loss", "train_acc", "test_acc"};
    if (t.columns.size() < 6)
        throw FormatError(path + ": trajectory header too short");
    for (std::size_t i = 0; i < 4; ++i)
        if (t.columns[i] != kFixed[i])
            throw FormatError(path + ": expected column '" + kFixed[i] + "', got '" +
                              t.columns[i] + "'");
    t.heads = (t.columns.size() - 4) / 2;
    if (t.columns.size() != 4 + 2 * t.heads || t.columns[4] != "w_1")
        throw FormatError(path + ": malformed w/ce column block");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError(path + ":" + std::to_string(lineno) + ": '" + cell +
                                  "' is not a number");
            }
        }
        if (row.size() != t.columns.size())
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": wrong field count");
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) throw FormatError(path + ": no epochs recorded");
    return t;
}

}  // namespace netcut
