#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "netcut/data.hpp"
#include "netcut/rng.hpp"
#include "netcut/train.hpp"

namespace fs = std::filesystem;
using namespace netcut;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() /
                     ("netcut_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    REQUIRE(out.good());
}

RunResult run(const std::string& args) {
    static int counter = 0;
    const fs::path out_file = scratch() / ("stdout." + std::to_string(counter));
    const fs::path err_file = scratch() / ("stderr." + std::to_string(counter));
    ++counter;
    const std::string cmd = std::string(NETCUT_BIN) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

// `key=value` fields of a one-line summary
std::map<std::string, std::string> parse_summary(const std::string& line) {
    std::map<std::string, std::string> fields;
    std::istringstream in(line);
    std::string token;
    while (in >> token) {
        const std::size_t eq = token.find('=');
        REQUIRE(eq != std::string::npos);
        fields[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return fields;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::istringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

// one trained model shared by the cut/eval/heatmap cases
struct Trained {
    fs::path dir;
    fs::path model;
    fs::path trajectory;
    fs::path heatmap;
    std::map<std::string, std::string> summary;
};

// the held-out blob set the shared training run uses, exported as text
const fs::path& blob_csv() {
    static const fs::path path = [] {
        const Dataset test = synth_blobs(20, 8, 4, 0.0, Rng::derive(1, 3));
        std::ostringstream text;
        for (std::size_t i = 0; i < test.n(); ++i) {
            for (std::size_t j = 0; j < test.dim(); ++j)
                text << test.X.at(i, j) << ',';
            text << test.y[i] << '\n';
        }
        const fs::path p = scratch() / "test_set.csv";
        spit(p, text.str());
        return p;
    }();
    return path;
}

const Trained& trained_fixture() {
    static const Trained t = [] {
        Trained f;
        f.dir = scratch() / "fit";
        const fs::path cfg = scratch() / "fit.cfg";
        spit(cfg,
             "epochs = 50\n"
             "batch_size = 32\n"
             "learning_rate = 0.003\n"
             "head_lr = 0.05\n"
             "beta = 0.01\n"
             "seed = 1\n"
             "blob_classes = 4\n"
             "blob_dim = 8\n"
             "blob_train_per_class = 50\n"
             "blob_test_per_class = 20\n"
             "blob_sigma = 0.0\n"
             "chain_layers = 6\n"
             "chain_width = 16\n"
             "out_dir = " + f.dir.string() + "\n");
        const RunResult r = run("train " + cfg.string());
        REQUIRE(r.code == 0);
        f.model = f.dir / "model.ncm";
        f.trajectory = f.dir / "trajectory.csv";
        f.heatmap = f.dir / "heatmap.svg";
        REQUIRE(fs::exists(f.model));
        REQUIRE(fs::exists(f.trajectory));
        REQUIRE(fs::exists(f.heatmap));
        std::istringstream out(r.out);
        std::string line;
        REQUIRE(std::getline(out, line));
        f.summary = parse_summary(line);
        return f;
    }();
    return t;
}

}  // namespace

TEST_CASE("train writes its artifacts and the summary matches the trajectory") {
    const Trained& f = trained_fixture();
    REQUIRE(f.summary.count("chosen_head"));
    REQUIRE(f.summary.count("max_w"));
    REQUIRE(f.summary.count("test_acc"));

    const std::vector<std::string> lines = read_lines(f.trajectory);
    REQUIRE(lines.size() >= 2);
    const std::vector<std::string> header = split_csv(lines.front());
    REQUIRE(header.size() == 4 + 6 + 6);
    CHECK(header[0] == "epoch");
    CHECK(header[3] == "test_acc");
    CHECK(header[4] == "w_1");

    const std::vector<std::string> last = split_csv(lines.back());
    REQUIRE(last.size() == header.size());
    CHECK(std::stoul(last[0]) == 50);

    // summary fields parse back to the final row
    CHECK(std::stod(f.summary.at("test_acc")) == std::stod(last[3]));
    std::size_t argmax = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < 6; ++k) {
        const double w = std::stod(last[4 + k]);
        if (w > best) {
            best = w;
            argmax = k;
        }
    }
    CHECK(std::stoul(f.summary.at("chosen_head")) == argmax + 1);
    CHECK(std::stod(f.summary.at("max_w")) == best);
    CHECK(best >= 0.99);  // separable blobs collapse onto one head
}

TEST_CASE("cut reports a strictly smaller parameter count") {
    const Trained& f = trained_fixture();
    const fs::path cut_path = scratch() / "fit" / "cut.ncm";
    const RunResult r =
        run("cut --model " + f.model.string() + " --out " + cut_path.string());
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(cut_path));
    const auto fields = parse_summary(r.out);
    REQUIRE(fields.count("params_before"));
    REQUIRE(fields.count("params_after"));
    CHECK(std::stoul(fields.at("params_before")) >
          std::stoul(fields.at("params_after")));
}

TEST_CASE("eval agrees between the full model and its cut") {
    const Trained& f = trained_fixture();
    const fs::path cut_path = scratch() / "fit" / "cut2.ncm";
    REQUIRE(run("cut --model " + f.model.string() + " --out " + cut_path.string())
                .code == 0);

    const fs::path data = blob_csv();
    const RunResult full =
        run("eval --model " + f.model.string() + " --data " + data.string());
    const RunResult cut_run =
        run("eval --model " + cut_path.string() + " --data " + data.string());
    REQUIRE(full.code == 0);
    REQUIRE(cut_run.code == 0);
    const double acc_full = std::stod(parse_summary(full.out).at("accuracy"));
    const double acc_cut = std::stod(parse_summary(cut_run.out).at("accuracy"));

    CHECK(acc_full == std::stod(f.summary.at("test_acc")));
    CHECK(std::abs(acc_full - acc_cut) <= 0.02);
}

TEST_CASE("a malformed config exits 1 and leaves no artifacts") {
    const fs::path cfg = scratch() / "bad.cfg";
    const fs::path out_dir = scratch() / "bad_out";
    spit(cfg,
         "epochs = 5\nbananas = 3\nchain_layers = 4\nchain_width = 8\n"
         "out_dir = " + out_dir.string() + "\n");
    const RunResult r = run("train " + cfg.string());
    CHECK(r.code == 1);
    CHECK(!r.err.empty());
    CHECK_FALSE(fs::exists(out_dir));

    CHECK(run("train " + (scratch() / "missing.cfg").string()).code == 1);
}

TEST_CASE("an overflowing naive scheme halts with exit 3 and a truncated log") {
    const fs::path out_dir = scratch() / "halt_out";
    const fs::path cfg = scratch() / "halt.cfg";
    const std::string common =
        "epochs = 30\n"
        "batch_size = 64\n"
        "learning_rate = 0.003\n"
        "seed = 2\n"
        "blob_classes = 4\n"
        "blob_dim = 16\n"
        "blob_train_per_class = 100\n"
        "blob_test_per_class = 25\n"
        "blob_sigma = 0.3\n"
        "input_scale = 1000\n"
        "chain_layers = 5\n"
        "chain_width = 16\n"
        "out_dir = " + out_dir.string() + "\n";
    spit(cfg, "scheme = prob-naive\n" + common);

    const RunResult r = run("train " + cfg.string());
    CHECK(r.code == 3);
    CHECK(r.err.find("halted") != std::string::npos);
    CHECK_FALSE(fs::exists(out_dir / "model.ncm"));

    const std::vector<std::string> lines = read_lines(out_dir / "trajectory.csv");
    REQUIRE(lines.size() >= 2);
    const std::vector<std::string> last = split_csv(lines.back());
    const double loss = std::stod(last[1]);
    CHECK(std::isnan(loss));
    CHECK(std::stoul(last[0]) <= 30);

    // the same run under the stable scheme finishes cleanly
    const fs::path log_cfg = scratch() / "halt_log.cfg";
    const fs::path log_out = scratch() / "halt_log_out";
    spit(log_cfg, "scheme = log\n" + common.substr(0, common.rfind("out_dir")) +
                      "out_dir = " + log_out.string() + "\n");
    const RunResult stable = run("train " + log_cfg.string());
    CHECK(stable.code == 0);
    CHECK(fs::exists(log_out / "model.ncm"));
}

TEST_CASE("gen-graph output is byte-identical across runs") {
    const fs::path g1 = scratch() / "g1.graph";
    const fs::path g2 = scratch() / "g2.graph";
    REQUIRE(run("gen-graph --nodes 9 --edge-prob 0.3 --seed 11 --width 16 --out " +
                g1.string())
                .code == 0);
    REQUIRE(run("gen-graph --nodes 9 --edge-prob 0.3 --seed 11 --width 16 --out " +
                g2.string())
                .code == 0);
    const std::string a = slurp(g1);
    REQUIRE(!a.empty());
    CHECK(a == slurp(g2));
    CHECK(a.find("nodes 9") != std::string::npos);
    CHECK(a.find("width 16") != std::string::npos);
}

TEST_CASE("heatmap renders a legend and rejects an empty trajectory") {
    const Trained& f = trained_fixture();
    const fs::path svg = scratch() / "fit" / "replot.svg";
    REQUIRE(run("heatmap --trajectory " + f.trajectory.string() + " --out " +
                svg.string())
                .code == 0);
    const std::string body = slurp(svg);
    CHECK(body.rfind("<?xml", 0) == 0);
    CHECK(body.find("<svg") != std::string::npos);
    CHECK(body.find(">1</text>") != std::string::npos);
    CHECK(body.find(">1e-4</text>") != std::string::npos);
    CHECK(body.find("epoch</text>") != std::string::npos);
    // the CLI rendering matches the one train wrote
    CHECK(body == slurp(f.heatmap));

    const fs::path empty = scratch() / "empty.csv";
    spit(empty, "epoch,train_loss,train_acc,test_acc,w_1,ce_1\n");
    const RunResult r =
        run("heatmap --trajectory " + empty.string() + " --out " +
            (scratch() / "empty.svg").string());
    CHECK(r.code == 2);
}

TEST_CASE("a damaged model file exits 2") {
    const fs::path bogus = scratch() / "bogus.ncm";
    spit(bogus, "BOGUS01\nkind full\n");
    const RunResult r = run("cut --model " + bogus.string() + " --out " +
                            (scratch() / "never.ncm").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("NETCUT01") != std::string::npos);
    CHECK_FALSE(fs::exists(scratch() / "never.ncm"));
}

TEST_CASE("multi-seed runs suffix their artifacts by seed") {
    const fs::path out_dir = scratch() / "multi_out";
    const fs::path cfg = scratch() / "multi.cfg";
    spit(cfg,
         "epochs = 3\n"
         "batch_size = 32\n"
         "learning_rate = 0.003\n"
         "seeds = 4 5\n"
         "blob_classes = 3\n"
         "blob_dim = 6\n"
         "blob_train_per_class = 30\n"
         "blob_test_per_class = 10\n"
         "blob_sigma = 0.2\n"
         "chain_layers = 4\n"
         "chain_width = 8\n"
         "out_dir = " + out_dir.string() + "\n");
    const RunResult r = run("train " + cfg.string());
    REQUIRE(r.code == 0);
    for (const std::string seed : {"4", "5"}) {
        CHECK(fs::exists(out_dir / ("trajectory-s" + seed + ".csv")));
        CHECK(fs::exists(out_dir / ("heatmap-s" + seed + ".svg")));
        CHECK(fs::exists(out_dir / ("model-s" + seed + ".ncm")));
    }
    CHECK_FALSE(fs::exists(out_dir / "trajectory.csv"));
    std::istringstream out(r.out);
    std::string line;
    std::size_t summaries = 0;
    while (std::getline(out, line))
        if (line.rfind("chosen_head=", 0) == 0) ++summaries;
    CHECK(summaries == 2);
}

TEST_CASE("bench runs a sweep through the command line") {
    const fs::path csv = scratch() / "sweep.csv";
    const RunResult r = run(
        "bench --width 24 --depths 3 5 7 --batch 2 --repeats 30 --warmup 5 "
        "--seed 3 --out " + csv.string());
    REQUIRE(r.code == 0);
    const auto fields = parse_summary(r.out);
    CHECK(fields.count("slope"));
    CHECK(fields.count("r2"));
    const std::vector<std::string> lines = read_lines(csv);
    REQUIRE(lines.size() == 5);  // header + 3 rows + fit trailer
    CHECK(lines.front() == "depth,batch,median_ns,iqr_ns");
    CHECK(lines.back().rfind("fit,", 0) == 0);

    // an out-of-contract repeat count is a configuration problem
    CHECK(run("bench --width 24 --depths 3 5 7 --repeats 10 --out " +
              (scratch() / "x.csv").string())
              .code == 1);
}

TEST_CASE("analyze writes both rho reports for a full model") {
    const Trained& f = trained_fixture();
    const fs::path prefix = scratch() / "fit" / "grad";
    const RunResult r = run("analyze --model " + f.model.string() + " --data " +
                            blob_csv().string() +
                            " --batch 32 --selector block1.W --out " +
                            prefix.string());
    REQUIRE(r.code == 0);
    const std::string vec = slurp(fs::path(prefix.string() + "-rho-full.csv"));
    const std::string mat = slurp(fs::path(prefix.string() + "-rho-pairs.csv"));
    CHECK(vec.rfind("# selector=block1.W batch=32", 0) == 0);
    CHECK(mat.rfind("# selector=block1.W batch=32", 0) == 0);
    CHECK(vec.find("head,rho_vs_full") != std::string::npos);

    // a cut model has no per-head gradients to compare
    const fs::path cut_path = scratch() / "fit" / "cut3.ncm";
    REQUIRE(run("cut --model " + f.model.string() + " --out " + cut_path.string())
                .code == 0);
    CHECK(run("analyze --model " + cut_path.string() + " --data " +
              blob_csv().string() + " --batch 8 --out " +
              (scratch() / "fit" / "never").string())
              .code == 1);
}

TEST_CASE("bad command lines exit 1 and --help exits 0") {
    CHECK(run("").code == 1);                     // missing subcommand
    CHECK(run("train").code == 1);                // missing config path
    CHECK(run("cut --model only.ncm").code == 1); // missing --out
    CHECK(run("frobnicate").code == 1);           // unknown subcommand
    CHECK(run("--help").code == 0);
    CHECK(run("train --help").code == 0);
}
