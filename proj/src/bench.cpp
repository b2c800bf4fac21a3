#include "netcut/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>

#include "netcut/kernels.hpp"
#include "netcut/rng.hpp"

namespace netcut {

namespace {

Tensor random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Tensor x({rows, cols});
    Rng rng(seed);
    for (double& v : x.values) v = rng.uniform();
    return x;
}

LatencyStats time_forward(const std::function<void()>& forward, std::size_t depth,
                          std::size_t batch_size, std::size_t repeats,
                          std::size_t warmup) {
    if (repeats < 30) throw ConfigError("benchmark needs at least 30 repeats");
    if (warmup < 5) throw ConfigError("benchmark needs at least 5 warmup runs");
    kernels::SingleThreadScope pin;
    for (std::size_t i = 0; i < warmup; ++i) forward();
    std::vector<double> ns(repeats);
    for (std::size_t i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        forward();
        const auto t1 = std::chrono::steady_clock::now();
        ns[i] = static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    std::sort(ns.begin(), ns.end());
    const auto at = [&](double q) {
        return ns[static_cast<std::size_t>(q * static_cast<double>(repeats - 1))];
    };
    LatencyStats s;
    s.depth = depth;
    s.batch = batch_size;
    s.repeats = repeats;
    s.warmup = warmup;
    s.median_ns = repeats % 2 == 1 ? ns[repeats / 2]
                                   : 0.5 * (ns[repeats / 2 - 1] + ns[repeats / 2]);
    s.iqr_ns = at(0.75) - at(0.25);
    return s;
}

}  // namespace

LatencyStats bench_cut_model(const CutModel& m, std::size_t batch_size,
                             std::size_t repeats, std::size_t warmup) {
    const Tensor x = random_batch(batch_size, m.arch.in_dim, 0x9d7ab1e5u);
    Tensor sink;
    return time_forward([&] { sink = forward_cut(m, x); }, m.depth(), batch_size,
                        repeats, warmup);
}

LatencyStats bench_full_model(const ArchGraph& arch, const ModelParams& params,
                              std::size_t batch_size, std::size_t repeats,
                              std::size_t warmup) {
    const Tensor x = random_batch(batch_size, arch.in_dim, 0x9d7ab1e5u);
    std::vector<Tensor> sink;
    return time_forward([&] { sink = infer_logprobs(arch, params, x); }, arch.n,
                        batch_size, repeats, warmup);
}

CutModel make_bench_chain(std::size_t depth, std::size_t width, std::size_t classes,
                          std::uint64_t seed) {
    const ArchGraph arch = build_chain(depth, width, width, classes);
    ModelParams params = init_params(arch, 1.0, seed);
    // pin the head weight on the last node so the cut keeps the whole chain
    params.u[depth - 1] = 1.0;
    return cut(arch, params);
}

void fit_line(const std::vector<double>& x, const std::vector<double>& y,
              double& slope, double& intercept, double& r2) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractError("line fit needs at least two matched points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw NumericError("degenerate x values in line fit");
    slope = (n * sxy - sx * sy) / den;
    intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double fit = slope * x[i] + intercept;
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
}

BenchReport depth_sweep(std::size_t width, const std::vector<std::size_t>& depths,
                        std::size_t batch_size, std::size_t repeats,
                        std::size_t warmup, std::uint64_t seed) {
    if (depths.size() < 3) throw ConfigError("depth sweep needs at least 3 depths");
    BenchReport report;
    std::vector<double> xs, ys;
    for (std::size_t depth : depths) {
        const CutModel m =
            make_bench_chain(depth, width, 10, Rng::derive(seed, depth));
        const LatencyStats s = bench_cut_model(m, batch_size, repeats, warmup);
        xs.push_back(static_cast<double>(depth));
        ys.push_back(s.median_ns);
        report.rows.push_back(s);
    }
    fit_line(xs, ys, report.slope, report.intercept, report.r2);
    report.fitted = true;
    return report;
}

void write_bench_csv(const std::string& path, const BenchReport& report) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << std::setprecision(17);
    out << "depth,batch,median_ns,iqr_ns\n";
    for (const LatencyStats& s : report.rows)
        out << s.depth << ',' << s.batch << ',' << s.median_ns << ',' << s.iqr_ns
            << "\n";
    if (report.fitted)
        out << "fit," << report.slope << ',' << report.intercept << ',' << report.r2
            << "\n";
    if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace netcut
