#include "netcut/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "netcut/rng.hpp"

namespace netcut {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw CorruptionError(path + ": file ends inside a header field");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

}  // namespace

void Dataset::validate() const {
    if (n() == 0) throw FormatError("dataset is empty");
    if (y.size() != n())
        throw FormatError("dataset has " + std::to_string(n()) + " samples but " +
                          std::to_string(y.size()) + " labels");
    if (classes == 0) throw LabelError("dataset declares zero classes");
    for (std::size_t l : y)
        if (l >= classes)
            throw LabelError("label " + std::to_string(l) + " out of range for " +
                             std::to_string(classes) + " classes");
    if (!X.all_finite()) throw NumericError("dataset features contain non-finite values");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw ConfigError("cannot open " + images_path);
    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != kImageMagic)
        throw FormatError(images_path + ": magic " + hex32(img_magic) + ", expected " +
                          hex32(kImageMagic));
    const std::uint32_t n = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const std::size_t d = std::size_t(rows) * cols;
    if (n == 0 || d == 0) throw FormatError(images_path + ": empty image dimensions");
    std::vector<std::uint8_t> pixels(std::size_t(n) * d);
    if (!img.read(reinterpret_cast<char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size())))
        throw CorruptionError(images_path + ": file ends inside pixel data");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw ConfigError("cannot open " + labels_path);
    const std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != kLabelMagic)
        throw FormatError(labels_path + ": magic " + hex32(lab_magic) + ", expected " +
                          hex32(kLabelMagic));
    const std::uint32_t ln = read_be32(lab, labels_path);
    if (ln != n)
        throw FormatError(images_path + " declares " + std::to_string(n) +
                          " samples but " + labels_path + " declares " +
                          std::to_string(ln));
    std::vector<std::uint8_t> raw_labels(ln);
    if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                  static_cast<std::streamsize>(raw_labels.size())))
        throw CorruptionError(labels_path + ": file ends inside label data");

    Dataset ds;
    ds.X = Tensor({n, d});
    for (std::size_t i = 0; i < pixels.size(); ++i)
        ds.X[i] = static_cast<double>(pixels[i]) / 255.0;
    ds.y.assign(raw_labels.begin(), raw_labels.end());
    std::size_t max_label = 0;
    for (std::size_t l : ds.y) max_label = std::max(max_label, l);
    ds.classes = max_label + 1;
    ds.validate();
    return ds;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<std::uint8_t>& pixels, std::size_t n,
               std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& labels) {
    if (pixels.size() != n * rows * cols)
        throw DimensionError("pixel buffer does not match declared dimensions");
    if (labels.size() != n)
        throw DimensionError("label buffer does not match sample count");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw ConfigError("cannot open " + images_path + " for writing");
    write_be32(img, kImageMagic);
    write_be32(img, static_cast<std::uint32_t>(n));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    img.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!img) throw ConfigError("failed writing " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw ConfigError("cannot open " + labels_path + " for writing");
    write_be32(lab, kLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(n));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!lab) throw ConfigError("failed writing " + labels_path);
}

Dataset load_delimited(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::vector<double> features;
    std::vector<std::size_t> labels;
    std::size_t d = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        std::vector<double> fields;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw FormatError(where + ": '" + cell + "' is not a number");
            }
            while (used < cell.size() &&
                   (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r'))
                ++used;
            if (used != cell.size())
                throw FormatError(where + ": '" + cell + "' is not a number");
            fields.push_back(v);
        }
        if (fields.size() < 2)
            throw FormatError(where + ": need at least one feature and a label");
        const double lv = fields.back();
        fields.pop_back();
        if (lv < 0 || lv != static_cast<double>(static_cast<std::size_t>(lv)))
            throw LabelError(where + ": label must be a non-negative integer");
        if (d == 0)
            d = fields.size();
        else if (fields.size() != d)
            throw FormatError(where + ": expected " + std::to_string(d) +
                              " features, got " + std::to_string(fields.size()));
        features.insert(features.end(), fields.begin(), fields.end());
        labels.push_back(static_cast<std::size_t>(lv));
    }
    if (labels.empty()) throw FormatError(path + ": no samples");
    Dataset ds;
    ds.X = Tensor({labels.size(), d}, std::move(features));
    ds.y = std::move(labels);
    std::size_t max_label = 0;
    for (std::size_t l : ds.y) max_label = std::max(max_label, l);
    ds.classes = max_label + 1;
    ds.validate();
    return ds;
}

Dataset synth_blobs(std::size_t n_per_class, std::size_t d, std::size_t classes,
                    double spread, std::uint64_t seed) {
    if (n_per_class == 0 || d == 0 || classes == 0)
        throw ConfigError("blob generator requires positive sizes");
    if (d < classes)
        throw ConfigError("blob dimension " + std::to_string(d) +
                          " smaller than class count " + std::to_string(classes));
    if (spread < 0.0) throw ConfigError("blob spread must be non-negative");
    const std::size_t block = d / classes;
    Dataset ds;
    ds.classes = classes;
    ds.X = Tensor({n_per_class * classes, d});
    Rng rng(seed);
    std::size_t row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
            double* x = ds.X.data() + row * d;
            for (std::size_t j = 0; j < d; ++j) {
                const bool center = j >= c * block && j < (c + 1) * block;
                x[j] = (center ? 1.0 : 0.0) + spread * rng.normal();
            }
            ds.y.push_back(c);
        }
    }
    ds.validate();
    return ds;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t epoch_seed) {
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(epoch_seed);
    rng.shuffle(perm);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return out;
}

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
    Tensor y({labels.size(), classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes)
            throw LabelError("label " + std::to_string(labels[i]) +
                             " out of range for " + std::to_string(classes) +
                             " classes");
        y.at(i, labels[i]) = 1.0;
    }
    return y;
}

Tensor gather_rows(const Tensor& X, const std::vector<std::size_t>& idx) {
    Tensor out({idx.size(), X.cols()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= X.rows()) throw IndexError("row index out of range");
        for (std::size_t j = 0; j < X.cols(); ++j) out.at(i, j) = X.at(idx[i], j);
    }
    return out;
}

std::vector<std::size_t> gather_labels(const std::vector<std::size_t>& y,
                                       const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= y.size()) throw IndexError("label index out of range");
        out[i] = y[idx[i]];
    }
    return out;
}

}  // namespace netcut
