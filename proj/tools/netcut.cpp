// netcut: train multi-head classifiers, cut them to a single head, and report.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netcut/analysis.hpp"
#include "netcut/arch.hpp"
#include "netcut/bench.hpp"
#include "netcut/compress.hpp"
#include "netcut/config.hpp"
#include "netcut/data.hpp"
#include "netcut/error.hpp"
#include "netcut/model.hpp"
#include "netcut/report.hpp"
#include "netcut/train.hpp"

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shared dataset flags: an IDX pair or a delimited text file.
struct DataArgs {
    std::string images, labels, text;

    void attach(CLI::App* cmd) {
        cmd->add_option("--images", images, "IDX image file");
        cmd->add_option("--labels", labels, "IDX label file");
        cmd->add_option("--data", text, "delimited text dataset (features..., label)");
    }

    netcut::Dataset load() const {
        const bool idx = !images.empty() || !labels.empty();
        const bool txt = !text.empty();
        if (idx == txt)
            throw netcut::ConfigError(
                "give either --images with --labels, or --data, not both");
        if (idx) {
            if (images.empty() || labels.empty())
                throw netcut::ConfigError("--images and --labels must be given together");
            return netcut::load_idx(images, labels);
        }
        return netcut::load_delimited(text);
    }
};

std::vector<std::vector<double>> weight_history(const netcut::TrajectoryLog& log) {
    std::vector<std::vector<double>> w;
    w.reserve(log.records.size());
    for (const auto& rec : log.records) w.push_back(rec.w);
    return w;
}

int run_train(const std::string& config_path) {
    const netcut::RunConfig cfg = netcut::load_run_config(config_path);
    const auto [train_ds, test_ds] = netcut::load_datasets(cfg);
    const netcut::ArchGraph arch = netcut::make_arch(cfg, train_ds);

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec)
        throw netcut::ConfigError("cannot create output directory " + cfg.out_dir + ": " +
                                  ec.message());

    for (const std::uint64_t seed : cfg.seeds) {
        netcut::TrainConfig tc = cfg.train;
        tc.seed = seed;
        const netcut::TrainResult result = netcut::train(arch, train_ds, test_ds, tc);

        const std::string suffix =
            cfg.seeds.size() > 1 ? "-s" + std::to_string(seed) : "";
        const std::string base = cfg.out_dir + "/";
        netcut::write_trajectory_csv(base + "trajectory" + suffix + ".csv", result.log);
        netcut::write_heatmap_svg(base + "heatmap" + suffix + ".svg",
                                  weight_history(result.log));
        if (result.log.halted) {
            std::cerr << "training halted: non-finite loss at epoch "
                      << result.log.halt_epoch << " under scheme "
                      << netcut::scheme_name(tc.scheme) << "\n";
            return 3;
        }
        netcut::save_model(base + "model" + suffix + ".ncm", arch, result.params);

        const std::vector<double> w = netcut::head_weight_values(result.params.u);
        const std::size_t chosen = netcut::choose_head(result.params.u);
        std::cout << "chosen_head=" << (chosen + 1) << " max_w=" << fmt(w[chosen])
                  << " test_acc=" << fmt(result.log.records.back().test_acc) << "\n";
    }
    return 0;
}

int run_cut(const std::string& model_path, const std::string& out_path) {
    const netcut::ModelFile file = netcut::load_model(model_path);
    std::size_t before = 0;
    netcut::CutModel cm;
    if (file.is_cut) {
        before = file.cut.param_count();
        cm = netcut::cut(file.cut);
    } else {
        before = file.params.param_count();
        cm = netcut::cut(file.arch, file.params);
    }
    netcut::save_model(out_path, cm);
    std::cout << "params_before=" << before << " params_after=" << cm.param_count()
              << "\n";
    return 0;
}

double cut_accuracy(const netcut::CutModel& m, const netcut::Dataset& ds) {
    constexpr std::size_t kChunk = 512;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < ds.n(); start += kChunk) {
        const std::size_t stop = std::min(start + kChunk, ds.n());
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const netcut::Tensor logp =
            netcut::forward_cut(m, netcut::gather_rows(ds.X, idx));
        for (std::size_t r = 0; r < logp.rows(); ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < logp.cols(); ++c)
                if (logp.at(r, c) > logp.at(r, best)) best = c;
            if (best == ds.y[start + r]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(ds.n());
}

int run_eval(const std::string& model_path, const DataArgs& data,
             const std::string& scheme_name, double input_scale) {
    const netcut::ModelFile file = netcut::load_model(model_path);
    netcut::Dataset ds = data.load();
    if (input_scale != 1.0)
        for (double& v : ds.X.values) v *= input_scale;

    double acc = 0.0;
    if (file.is_cut) {
        if (ds.X.cols() != file.cut.arch.in_dim)
            throw netcut::DimensionError("dataset feature width " +
                                         std::to_string(ds.X.cols()) +
                                         " does not match model input width " +
                                         std::to_string(file.cut.arch.in_dim));
        acc = cut_accuracy(file.cut, ds);
    } else {
        const netcut::Scheme scheme = netcut::parse_scheme(scheme_name);
        acc = netcut::evaluate(file.arch, file.params, ds, scheme).accuracy;
    }
    std::cout << "accuracy=" << fmt(acc) << "\n";
    return 0;
}

int run_bench(const std::string& model_path, std::size_t width,
              const std::vector<std::size_t>& depths, std::size_t batch,
              std::size_t repeats, std::size_t warmup, std::uint64_t seed,
              const std::string& out_path) {
    if (!model_path.empty()) {
        const netcut::ModelFile file = netcut::load_model(model_path);
        const netcut::LatencyStats stats =
            file.is_cut
                ? netcut::bench_cut_model(file.cut, batch, repeats, warmup)
                : netcut::bench_full_model(file.arch, file.params, batch, repeats, warmup);
        if (!out_path.empty()) {
            netcut::BenchReport report;
            report.rows.push_back(stats);
            netcut::write_bench_csv(out_path, report);
        }
        std::cout << "depth=" << stats.depth << " batch=" << stats.batch
                  << " median_ns=" << fmt(stats.median_ns)
                  << " iqr_ns=" << fmt(stats.iqr_ns) << "\n";
        return 0;
    }
    if (width == 0 || depths.empty())
        throw netcut::ConfigError("bench needs either --model, or --width with --depths");
    if (out_path.empty())
        throw netcut::ConfigError("depth sweep needs --out for the report CSV");
    const netcut::BenchReport report =
        netcut::depth_sweep(width, depths, batch, repeats, warmup, seed);
    netcut::write_bench_csv(out_path, report);
    std::cout << "slope=" << fmt(report.slope) << " intercept=" << fmt(report.intercept)
              << " r2=" << fmt(report.r2) << "\n";
    return 0;
}

int run_analyze(const std::string& model_path, const DataArgs& data,
                std::size_t batch_rows, const std::string& selector,
                const std::string& scheme_name, double beta,
                const std::string& out_prefix) {
    const netcut::ModelFile file = netcut::load_model(model_path);
    if (file.is_cut)
        throw netcut::ConfigError("gradient analysis needs a full multi-head model");
    const netcut::Dataset ds = data.load();
    if (ds.n() == 0) throw netcut::ConfigError("analysis dataset is empty");

    const std::size_t rows = std::min(batch_rows, ds.n());
    std::vector<std::size_t> idx(rows);
    for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
    const netcut::Tensor batch = netcut::gather_rows(ds.X, idx);
    const std::vector<std::size_t> labels = netcut::gather_labels(ds.y, idx);

    const auto sel = netcut::ParamSelector::parse(selector, file.arch.n);
    const netcut::GradientReport report = netcut::gradient_report(
        file.arch, file.params, batch, labels, sel, netcut::parse_scheme(scheme_name),
        beta);
    netcut::write_rho_vector_csv(out_prefix + "-rho-full.csv", report);
    netcut::write_rho_matrix_csv(out_prefix + "-rho-pairs.csv", report);
    return 0;
}

int run_gen_graph(std::size_t nodes, double edge_prob, std::uint64_t seed,
                  std::size_t width, const std::string& out_path) {
    netcut::ArchGraph arch = netcut::random_dag(nodes, edge_prob, seed);
    arch.width = width;
    netcut::write_graph_file(out_path, arch);
    return 0;
}

int run_heatmap(const std::string& trajectory_path, const std::string& out_path) {
    const netcut::TrajectoryTable table = netcut::read_trajectory_csv(trajectory_path);
    std::vector<std::vector<double>> w;
    w.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) w.push_back(table.w_row(r));
    netcut::write_heatmap_svg(out_path, w);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netcut: multi-head network training, cutting and reporting"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* cmd_train = app.add_subcommand(
        "train", "train from a config file; writes trajectory CSV, model and heatmap");
    cmd_train->add_option("config", config_path, "run configuration file")->required();

    std::string cut_model, cut_out;
    CLI::App* cmd_cut =
        app.add_subcommand("cut", "cut a trained model down to its chosen head");
    cmd_cut->add_option("--model", cut_model, "input model file")->required();
    cmd_cut->add_option("--out", cut_out, "output model file")->required();

    std::string eval_model, eval_scheme = "log";
    double eval_scale = 1.0;
    DataArgs eval_data;
    CLI::App* cmd_eval = app.add_subcommand("eval", "report a model's accuracy on a dataset");
    cmd_eval->add_option("--model", eval_model, "model file")->required();
    eval_data.attach(cmd_eval);
    cmd_eval->add_option("--scheme", eval_scheme,
                         "aggregation for full models: log, prob or prob-naive");
    cmd_eval->add_option("--input-scale", eval_scale, "multiply features after loading");

    std::string bench_model, bench_out;
    std::size_t bench_width = 0, bench_batch = 1, bench_repeats = 50, bench_warmup = 5;
    std::uint64_t bench_seed = 0;
    std::vector<std::size_t> bench_depths;
    CLI::App* cmd_bench =
        app.add_subcommand("bench", "time single-thread forward passes");
    cmd_bench->add_option("--model", bench_model, "time this model file");
    cmd_bench->add_option("--width", bench_width, "chain width for a depth sweep");
    cmd_bench->add_option("--depths", bench_depths, "chain depths to sweep");
    cmd_bench->add_option("--batch", bench_batch, "rows per forward pass");
    cmd_bench->add_option("--repeats", bench_repeats, "timed runs per point (>= 30)");
    cmd_bench->add_option("--warmup", bench_warmup, "unrecorded runs per point (>= 5)");
    cmd_bench->add_option("--seed", bench_seed, "sweep model seed");
    cmd_bench->add_option("--out", bench_out, "report CSV path");

    std::string ana_model, ana_selector = "block1.W", ana_scheme = "log", ana_out;
    std::size_t ana_batch = 256;
    double ana_beta = 0.0;
    DataArgs ana_data;
    CLI::App* cmd_analyze = app.add_subcommand(
        "analyze", "per-head gradient directions against the full gradient");
    cmd_analyze->add_option("--model", ana_model, "full model file")->required();
    ana_data.attach(cmd_analyze);
    cmd_analyze->add_option("--batch", ana_batch, "rows of the fixed analysis batch");
    cmd_analyze->add_option("--selector", ana_selector,
                            "parameter tensor: block<i>.W|b, head<i>.W|b, u");
    cmd_analyze->add_option("--scheme", ana_scheme, "aggregation scheme");
    cmd_analyze->add_option("--beta", ana_beta, "depth-penalty weight");
    cmd_analyze->add_option("--out", ana_out, "output CSV prefix")->required();

    std::size_t gg_nodes = 0, gg_width = 0;
    double gg_prob = 0.5;
    std::uint64_t gg_seed = 0;
    std::string gg_out;
    CLI::App* cmd_gen =
        app.add_subcommand("gen-graph", "write a random DAG description file");
    cmd_gen->add_option("--nodes", gg_nodes, "node count")->required();
    cmd_gen->add_option("--edge-prob", gg_prob, "extra-edge probability");
    cmd_gen->add_option("--seed", gg_seed, "generator seed");
    cmd_gen->add_option("--width", gg_width, "block width")->required();
    cmd_gen->add_option("--out", gg_out, "output path")->required();

    std::string hm_trajectory, hm_out;
    CLI::App* cmd_heatmap =
        app.add_subcommand("heatmap", "render a trajectory CSV's head weights as SVG");
    cmd_heatmap->add_option("--trajectory", hm_trajectory, "trajectory CSV")->required();
    cmd_heatmap->add_option("--out", hm_out, "output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*cmd_train) return run_train(config_path);
        if (*cmd_cut) return run_cut(cut_model, cut_out);
        if (*cmd_eval) return run_eval(eval_model, eval_data, eval_scheme, eval_scale);
        if (*cmd_bench)
            return run_bench(bench_model, bench_width, bench_depths, bench_batch,
                             bench_repeats, bench_warmup, bench_seed, bench_out);
        if (*cmd_analyze)
            return run_analyze(ana_model, ana_data, ana_batch, ana_selector, ana_scheme,
                               ana_beta, ana_out);
        if (*cmd_gen) return run_gen_graph(gg_nodes, gg_prob, gg_seed, gg_width, gg_out);
        if (*cmd_heatmap) return run_heatmap(hm_trajectory, hm_out);
    } catch (const netcut::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const netcut::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
