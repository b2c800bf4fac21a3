#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netcut/tensor.hpp"

namespace netcut {

struct Dataset {
    Tensor X;                     // [N x d]
    std::vector<std::size_t> y;  // class ids in [0, classes)
    std::size_t classes = 0;

    std::size_t n() const { return X.rows(); }
    std::size_t dim() const { return X.cols(); }
    void validate() const;  // N > 0, labels in range, features finite
};

// Big-endian IDX pair: images magic 0x00000803 with dims [N, rows, cols] and
// pixel bytes scaled by 1/255; labels magic 0x00000801. Images flatten to
// N x (rows*cols).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Byte-exact IDX writer (fixtures and round-trip tests).
void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<std::uint8_t>& pixels, std::size_t n,
               std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& labels);

// One sample per line: comma-separated features, last column an integer label.
Dataset load_delimited(const std::string& path);

// Gaussian blobs: class c's center sets the c-th block of floor(d/classes)
// coordinates to 1; noise sigma on every coordinate. Deterministic per seed.
Dataset synth_blobs(std::size_t n_per_class, std::size_t d, std::size_t classes,
                    double spread, std::uint64_t seed);

// Index batches for one epoch: a seed-determined permutation chopped into
// batch_size slices, final partial batch retained.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t epoch_seed);

// Dense one-hot matrix from class ids.
Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes);

// Row-subset of a dataset's features/labels.
Tensor gather_rows(const Tensor& X, const std::vector<std::size_t>& idx);
std::vector<std::size_t> gather_labels(const std::vector<std::size_t>& y,
                                       const std::vector<std::size_t>& idx);

}  // namespace netcut
