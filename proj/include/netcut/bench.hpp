#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netcut/compress.hpp"

namespace netcut {

struct LatencyStats {
    std::size_t depth = 0;   // block count on the execution path
    std::size_t batch = 0;
    std::size_t repeats = 0;
    std::size_t warmup = 0;
    double median_ns = 0.0;
    double iqr_ns = 0.0;
};

struct BenchReport {
    std::vector<LatencyStats> rows;
    double slope = 0.0;      // ns per block
    double intercept = 0.0;
    double r2 = 0.0;
    bool fitted = false;
};

// Times single-thread forward passes over a fixed random batch: `warmup`
// unrecorded runs, then `repeats` timed ones; reports median and IQR.
LatencyStats bench_cut_model(const CutModel& m, std::size_t batch_size,
                             std::size_t repeats, std::size_t warmup);
LatencyStats bench_full_model(const ArchGraph& arch, const ModelParams& params,
                              std::size_t batch_size, std::size_t repeats,
                              std::size_t warmup);

// Random single-head chain of the given depth (the depth-sweep subject).
CutModel make_bench_chain(std::size_t depth, std::size_t width, std::size_t classes,
                          std::uint64_t seed);

// Benches a chain per depth and least-squares fits latency = slope*depth + b.
BenchReport depth_sweep(std::size_t width, const std::vector<std::size_t>& depths,
                        std::size_t batch_size, std::size_t repeats,
                        std::size_t warmup, std::uint64_t seed);

// least-squares helper over (x, y) pairs; also exposed for tests
void fit_line(const std::vector<double>& x, const std::vector<double>& y,
              double& slope, double& intercept, double& r2);

// CSV rows `depth, batch, median_ns, iqr_ns` + trailer `fit, slope, intercept, r2`.
void write_bench_csv(const std::string& path, const BenchReport& report);

}  // namespace netcut
