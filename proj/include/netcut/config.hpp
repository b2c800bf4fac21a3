#pragma once

#include <map>
#include <string>
#include <vector>

#include "netcut/arch.hpp"
#include "netcut/data.hpp"
#include "netcut/train.hpp"

namespace netcut {

// Flat `key = value` lines, `#` starts a comment. Duplicate keys rejected.
std::map<std::string, std::string> parse_kv_file(const std::string& path);

// A full experiment: training hyperparameters plus exactly one dataset source,
// exactly one architecture source, an output directory and a seed list.
struct RunConfig {
    TrainConfig train;

    enum class DataKind { Blobs, Idx, Text } data = DataKind::Blobs;
    std::string train_images, train_labels, test_images, test_labels;  // idx
    std::string train_file, test_file;                                 // text
    std::size_t blob_classes = 4, blob_dim = 16;
    std::size_t blob_train_per_class = 200, blob_test_per_class = 50;
    double blob_sigma = 0.3;
    double input_scale = 1.0;  // multiplies every feature after loading

    enum class ArchKind { Chain, GraphFile } arch = ArchKind::Chain;
    std::size_t chain_layers = 0, chain_width = 0;
    std::string graph_file;

    std::string out_dir = ".";
    std::vector<std::uint64_t> seeds;  // one training run per seed
};

RunConfig load_run_config(const std::string& path);

// Materialize the configured dataset pair (train, test), input_scale applied.
std::pair<Dataset, Dataset> load_datasets(const RunConfig& cfg);

// Resolve the architecture against the dataset's dimensions.
ArchGraph make_arch(const RunConfig& cfg, const Dataset& train_ds);

}  // namespace netcut
