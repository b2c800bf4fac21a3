#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netcut/data.hpp"
#include "netcut/model.hpp"

namespace netcut {

enum class Scheme { Log, Prob, ProbNaive };
enum class InitScheme { Uniform, First, Last };

Scheme parse_scheme(const std::string& name);              // log | prob | prob-naive
InitScheme parse_init_scheme(const std::string& name);     // uniform | first | last
std::string scheme_name(Scheme s);
std::string init_scheme_name(InitScheme s);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double head_lr = 1e-3;  // rate for u; config loading defaults it to learning_rate
    double beta = 0.0;
    Scheme scheme = Scheme::Log;
    InitScheme init = InitScheme::Uniform;
    double init_kappa = 10.0;
    double param_scale = 1.0;  // m in the U[-m*s, m*s] dense init
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::vector<double> w;
    std::vector<double> head_ce;
};

struct TrajectoryLog {
    std::vector<EpochRecord> records;
    bool halted = false;          // non-finite loss stopped the run (prob schemes)
    std::size_t halt_epoch = 0;   // 1-based; the marked epoch when halted
};

struct TrainResult {
    ModelParams params;
    TrajectoryLog log;
};

// uniform -> u = 0; first -> u_1 = kappa; last -> u_n = kappa.
Tensor init_head_weights(InitScheme scheme, std::size_t n, double kappa);

// Joint Adam on theta and u against L_class + beta * L_reg. Non-finite loss or
// gradient: hard NumericError under scheme log, halt-and-mark otherwise.
// Bitwise deterministic for a fixed config.
TrainResult train(const ArchGraph& arch, const Dataset& train_ds,
                  const Dataset& test_ds, const TrainConfig& cfg);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;            // aggregated-output NLL
    std::vector<double> head_ce;       // per-head cross-entropy
};

// Aggregated-model metrics; prob-naive is evaluated on the stable path so
// metrics stay finite while the training path diverges.
EvalResult evaluate(const ArchGraph& arch, const ModelParams& params,
                    const Dataset& ds, Scheme scheme);

// CSV schema: epoch, train_loss, train_acc, test_acc, w_1..w_n, ce_1..ce_n.
void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);

struct TrajectoryTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::size_t heads = 0;

    // w block of one row
    std::vector<double> w_row(std::size_t r) const;
};
TrajectoryTable read_trajectory_csv(const std::string& path);

}  // namespace netcut
