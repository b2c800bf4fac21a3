#include "netcut/config.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "netcut/error.hpp"
#include "netcut/rng.hpp"

namespace netcut {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
    if (pos != value.size())
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    return v;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" +
                          value + "'");
    return static_cast<std::size_t>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                          value + "'");
    }
    if (pos != value.size())
        throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                          value + "'");
    return v;
}

}  // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
        kv[key] = value;
    }
    return kv;
}

RunConfig load_run_config(const std::string& path) {
    const auto kv = parse_kv_file(path);
    RunConfig cfg;

    static const std::set<std::string> known = {
        "epochs", "batch_size", "learning_rate", "head_lr", "beta", "scheme", "init",
        "init_kappa", "param_scale", "seed", "seeds",
        "data", "train_images", "train_labels", "test_images", "test_labels",
        "train_file", "test_file",
        "blob_classes", "blob_dim", "blob_train_per_class", "blob_test_per_class", "blob_sigma",
        "input_scale",
        "arch", "chain_layers", "chain_width", "graph_file", "out_dir",
    };
    for (const auto& [key, value] : kv) {
        (void)value;
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }

    const auto has = [&](const std::string& k) { return kv.count(k) != 0; };
    const auto get = [&](const std::string& k) { return kv.at(k); };

    // -- training hyperparameters ------------------------------------------
    if (has("epochs")) cfg.train.epochs = parse_size("epochs", get("epochs"));
    if (has("batch_size")) cfg.train.batch_size = parse_size("batch_size", get("batch_size"));
    if (has("learning_rate"))
        cfg.train.learning_rate = parse_double("learning_rate", get("learning_rate"));
    cfg.train.head_lr =
        has("head_lr") ? parse_double("head_lr", get("head_lr")) : cfg.train.learning_rate;
    if (has("beta")) cfg.train.beta = parse_double("beta", get("beta"));
    if (has("scheme")) cfg.train.scheme = parse_scheme(get("scheme"));
    if (has("init")) cfg.train.init = parse_init_scheme(get("init"));
    if (has("init_kappa")) cfg.train.init_kappa = parse_double("init_kappa", get("init_kappa"));
    if (has("param_scale")) cfg.train.param_scale = parse_double("param_scale", get("param_scale"));
    if (has("input_scale")) cfg.input_scale = parse_double("input_scale", get("input_scale"));

    if (has("seed") && has("seeds"))
        throw ConfigError("config keys 'seed' and 'seeds' are mutually exclusive");
    if (has("seeds")) {
        std::istringstream ss(get("seeds"));
        std::string tok;
        while (ss >> tok) cfg.seeds.push_back(parse_u64("seeds", tok));
        if (cfg.seeds.empty()) throw ConfigError("config key 'seeds': no values given");
    } else if (has("seed")) {
        cfg.seeds.push_back(parse_u64("seed", get("seed")));
    } else {
        cfg.seeds.push_back(0);
    }

    // -- dataset source -----------------------------------------------------
    const bool any_idx =
        has("train_images") || has("train_labels") || has("test_images") || has("test_labels");
    const bool any_text = has("train_file") || has("test_file");
    const bool any_blob = has("blob_classes") || has("blob_dim") ||
                          has("blob_train_per_class") || has("blob_test_per_class") ||
                          has("blob_sigma");
    std::string data_kind = has("data") ? get("data") : "";
    if (data_kind.empty()) {
        if (any_idx && !any_text && !any_blob) data_kind = "idx";
        else if (any_text && !any_idx && !any_blob) data_kind = "text";
        else if (!any_idx && !any_text) data_kind = "blobs";
        else
            throw ConfigError("config mixes dataset sources; set exactly one of "
                              "idx / text / blobs keys");
    }
    if (data_kind == "idx") {
        if (any_text || any_blob)
            throw ConfigError("config mixes dataset sources; 'data = idx' conflicts with "
                              "text/blobs keys");
        cfg.data = RunConfig::DataKind::Idx;
        for (const char* k : {"train_images", "train_labels", "test_images", "test_labels"})
            if (!has(k)) throw ConfigError(std::string("idx dataset requires config key '") + k + "'");
        cfg.train_images = get("train_images");
        cfg.train_labels = get("train_labels");
        cfg.test_images = get("test_images");
        cfg.test_labels = get("test_labels");
    } else if (data_kind == "text") {
        if (any_idx || any_blob)
            throw ConfigError("config mixes dataset sources; 'data = text' conflicts with "
                              "idx/blobs keys");
        cfg.data = RunConfig::DataKind::Text;
        for (const char* k : {"train_file", "test_file"})
            if (!has(k)) throw ConfigError(std::string("text dataset requires config key '") + k + "'");
        cfg.train_file = get("train_file");
        cfg.test_file = get("test_file");
    } else if (data_kind == "blobs") {
        if (any_idx || any_text)
            throw ConfigError("config mixes dataset sources; 'data = blobs' conflicts with "
                              "idx/text keys");
        cfg.data = RunConfig::DataKind::Blobs;
        if (has("blob_classes")) cfg.blob_classes = parse_size("blob_classes", get("blob_classes"));
        if (has("blob_dim")) cfg.blob_dim = parse_size("blob_dim", get("blob_dim"));
        if (has("blob_train_per_class"))
            cfg.blob_train_per_class = parse_size("blob_train_per_class", get("blob_train_per_class"));
        if (has("blob_test_per_class"))
            cfg.blob_test_per_class = parse_size("blob_test_per_class", get("blob_test_per_class"));
        if (has("blob_sigma")) cfg.blob_sigma = parse_double("blob_sigma", get("blob_sigma"));
    } else {
        throw ConfigError("config key 'data': expected idx, text or blobs, got '" + data_kind + "'");
    }

    // -- architecture source -------------------------------------------------
    const bool any_chain = has("chain_layers") || has("chain_width");
    std::string arch_kind = has("arch") ? get("arch") : "";
    if (arch_kind.empty()) {
        if (has("graph_file") && !any_chain) arch_kind = "graph";
        else if (any_chain && !has("graph_file")) arch_kind = "chain";
        else
            throw ConfigError("config needs exactly one architecture source: "
                              "chain_layers/chain_width or graph_file");
    }
    if (arch_kind == "chain") {
        if (has("graph_file"))
            throw ConfigError("config mixes architecture sources; 'arch = chain' conflicts "
                              "with graph_file");
        cfg.arch = RunConfig::ArchKind::Chain;
        for (const char* k : {"chain_layers", "chain_width"})
            if (!has(k)) throw ConfigError(std::string("chain architecture requires config key '") + k + "'");
        cfg.chain_layers = parse_size("chain_layers", get("chain_layers"));
        cfg.chain_width = parse_size("chain_width", get("chain_width"));
    } else if (arch_kind == "graph") {
        if (any_chain)
            throw ConfigError("config mixes architecture sources; 'arch = graph' conflicts "
                              "with chain keys");
        cfg.arch = RunConfig::ArchKind::GraphFile;
        if (!has("graph_file"))
            throw ConfigError("graph architecture requires config key 'graph_file'");
        cfg.graph_file = get("graph_file");
    } else {
        throw ConfigError("config key 'arch': expected chain or graph, got '" + arch_kind + "'");
    }

    if (has("out_dir")) cfg.out_dir = get("out_dir");
    if (cfg.out_dir.empty()) throw ConfigError("config key 'out_dir': empty path");

    cfg.train.seed = cfg.seeds.front();
    cfg.train.validate();
    return cfg;
}

std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg) {
    Dataset train, test;
    switch (cfg.data) {
        case RunConfig::DataKind::Idx:
            train = load_idx(cfg.train_images, cfg.train_labels);
            test = load_idx(cfg.test_images, cfg.test_labels);
            break;
        case RunConfig::DataKind::Text:
            train = load_delimited(cfg.train_file);
            test = load_delimited(cfg.test_file);
            break;
        case RunConfig::DataKind::Blobs: {
            const std::uint64_t base = cfg.seeds.front();
            train = synth_blobs(cfg.blob_train_per_class, cfg.blob_dim, cfg.blob_classes,
                                cfg.blob_sigma, Rng::derive(base, 2));
            test = synth_blobs(cfg.blob_test_per_class, cfg.blob_dim, cfg.blob_classes,
                               cfg.blob_sigma, Rng::derive(base, 3));
            break;
        }
    }
    const std::size_t classes = std::max(train.classes, test.classes);
    train.classes = test.classes = classes;
    if (cfg.input_scale != 1.0) {
        for (double& v : train.X.values) v *= cfg.input_scale;
        for (double& v : test.X.values) v *= cfg.input_scale;
    }
    train.validate();
    test.validate();
    return {std::move(train), std::move(test)};
}

ArchGraph make_arch(const RunConfig& cfg, const Dataset& train_ds) {
    if (cfg.arch == RunConfig::ArchKind::Chain)
        return build_chain(cfg.chain_layers, cfg.chain_width, train_ds.X.cols(), train_ds.classes);
    ArchGraph arch = load_graph_file(cfg.graph_file);
    arch.in_dim = train_ds.X.cols();
    arch.classes = train_ds.classes;
    arch.validate();
    return arch;
}

}  // namespace netcut
