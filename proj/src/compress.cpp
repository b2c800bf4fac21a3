#include "netcut/compress.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "netcut/kernels.hpp"

namespace netcut {

std::size_t CutModel::param_count() const {
    std::size_t c = head.W.numel() + head.b.numel();
    for (const DenseLayer& l : blocks) c += l.W.numel() + l.b.numel();
    return c;
}

std::size_t choose_head(const Tensor& u) {
    const std::vector<double> w = head_weight_values(u);
    std::size_t best = 0;
    for (std::size_t k = 1; k < w.size(); ++k)
        if (w[k] > w[best]) best = k;
    return best;
}

CutModel cut(const ArchGraph& arch, const ModelParams& params) {
    if (params.u.numel() != arch.n)
        throw DimensionError("head weight vector does not match node count");
    const std::size_t chosen = choose_head(params.u);
    const std::vector<bool> mask = arch.ancestor_mask(chosen);

    CutModel m;
    m.chosen = chosen;
    m.retained_cost = arch.is_chain() ? static_cast<double>(chosen + 1)
                                      : static_cast<double>(edge_cost(arch, chosen));
    std::vector<std::size_t> remap(arch.n, 0);
    for (std::size_t j = 0; j < arch.n; ++j) {
        if (!mask[j]) continue;
        remap[j] = m.kept.size();
        m.kept.push_back(j);
        m.blocks.push_back(params.blocks[j]);
    }
    m.head = params.heads[chosen];
    m.arch.n = m.kept.size();
    m.arch.width = arch.width;
    m.arch.in_dim = arch.in_dim;
    m.arch.classes = arch.classes;
    for (const auto& [a, b] : arch.edges)
        if (mask[b]) m.arch.edges.emplace_back(remap[a], remap[b]);
    std::sort(m.arch.edges.begin(), m.arch.edges.end());
    return m;
}

CutModel cut(const CutModel& m) {
    // the chosen node is the last one and every node is its ancestor,
    // so re-cutting keeps everything
    const std::vector<bool> mask = m.arch.ancestor_mask(m.arch.n - 1);
    for (bool kept : mask)
        if (!kept) throw ContractError("cut model contains a non-ancestor node");
    return m;
}

Tensor forward_cut(const CutModel& m, const Tensor& batch) {
    if (batch.cols() != m.arch.in_dim)
        throw DimensionError("batch " + batch.shape_str() +
                             " does not match input dimension " +
                             std::to_string(m.arch.in_dim));
    const std::size_t rows = batch.rows();
    std::vector<Tensor> block_out(m.arch.n);
    for (std::size_t j = 0; j < m.arch.n; ++j) {
        Tensor in;
        if (j == m.arch.input) {
            in = batch;
        } else {
            const std::vector<std::size_t> preds = m.arch.preds(j);
            in = block_out[preds[0]];
            for (std::size_t p = 1; p < preds.size(); ++p) {
                const Tensor& t = block_out[preds[p]];
                for (std::size_t i = 0; i < in.numel(); ++i) in[i] += t[i];
            }
        }
        const DenseLayer& l = m.blocks[j];
        Tensor z({rows, m.arch.width});
        kernels::matmul(in.data(), l.W.data(), z.data(), rows, in.cols(), m.arch.width);
        kernels::add_bias(z.data(), l.b.data(), z.data(), rows, m.arch.width);
        kernels::relu_forward(z.data(), z.data(), z.numel());
        block_out[j] = std::move(z);
    }
    Tensor z({rows, m.arch.classes});
    kernels::matmul(block_out[m.arch.n - 1].data(), m.head.W.data(), z.data(), rows,
                    m.arch.width, m.arch.classes);
    kernels::add_bias(z.data(), m.head.b.data(), z.data(), rows, m.arch.classes);
    Tensor lp(z.shape);
    kernels::log_softmax_rows(z.data(), lp.data(), rows, m.arch.classes);
    return lp;
}

// ---------------------------------------------------------------------------
// NETCUT01 container
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMagic = "NETCUT01";

void write_f64_le(std::ostream& out, const Tensor& t) {
    std::vector<unsigned char> buf(t.numel() * 8);
    for (std::size_t i = 0; i < t.numel(); ++i) {
        const std::uint64_t x = std::bit_cast<std::uint64_t>(t[i]);
        for (int b = 0; b < 8; ++b)
            buf[i * 8 + static_cast<std::size_t>(b)] =
                static_cast<unsigned char>(x >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
    out << "tensor " << name << " " << t.rank();
    for (std::size_t d : t.shape) out << " " << d;
    out << "\n";
    write_f64_le(out, t);
}

void write_arch_lines(std::ostream& out, const ArchGraph& arch) {
    out << "nodes " << arch.n << "\n";
    out << "width " << arch.width << "\n";
    out << "in_dim " << arch.in_dim << "\n";
    out << "classes " << arch.classes << "\n";
    std::vector<std::pair<std::size_t, std::size_t>> sorted = arch.edges;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [a, b] : sorted) out << "edge " << a + 1 << " " << b + 1 << "\n";
}

struct Reader {
    std::ifstream in;
    std::string path;

    std::string line() {
        std::string l;
        if (!std::getline(in, l)) throw CorruptionError(path + ": file ends early");
        return l;
    }

    Tensor payload(const std::vector<std::size_t>& shape) {
        Tensor t(shape);
        std::vector<unsigned char> buf(t.numel() * 8);
        if (!in.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(buf.size())))
            throw CorruptionError(path + ": file ends inside a tensor record");
        for (std::size_t i = 0; i < t.numel(); ++i) {
            std::uint64_t x = 0;
            for (int b = 7; b >= 0; --b)
                x = (x << 8) | buf[i * 8 + static_cast<std::size_t>(b)];
            t[i] = std::bit_cast<double>(x);
        }
        return t;
    }
};

Tensor read_named_tensor(Reader& r, const std::string& expect) {
    std::istringstream ls(r.line());
    std::string word, name;
    std::size_t rank = 0;
    if (!(ls >> word >> name >> rank) || word != "tensor")
        throw FormatError(r.path + ": malformed tensor record header");
    if (name != expect)
        throw FormatError(r.path + ": expected tensor '" + expect + "', found '" +
                          name + "'");
    if (rank == 0 || rank > 2) throw FormatError(r.path + ": bad tensor rank");
    std::vector<std::size_t> shape(rank);
    for (std::size_t& d : shape) {
        long long v = 0;
        if (!(ls >> v) || v <= 0) throw FormatError(r.path + ": bad tensor extent");
        d = static_cast<std::size_t>(v);
    }
    return r.payload(shape);
}

ArchGraph read_arch_lines(Reader& r, std::size_t& tensor_count,
                          std::vector<std::pair<std::string, std::string>>& extras) {
    ArchGraph g;
    bool saw[4] = {false, false, false, false};
    for (;;) {
        std::istringstream ls(r.line());
        std::string word;
        if (!(ls >> word)) throw FormatError(r.path + ": blank header line");
        if (word == "tensors") {
            long long v = 0;
            if (!(ls >> v) || v < 0) throw FormatError(r.path + ": bad tensor count");
            tensor_count = static_cast<std::size_t>(v);
            break;
        }
        long long a = 0, b = 0;
        if (word == "nodes" && (ls >> a) && a > 0) {
            g.n = static_cast<std::size_t>(a);
            saw[0] = true;
        } else if (word == "width" && (ls >> a) && a > 0) {
            g.width = static_cast<std::size_t>(a);
            saw[1] = true;
        } else if (word == "in_dim" && (ls >> a) && a > 0) {
            g.in_dim = static_cast<std::size_t>(a);
            saw[2] = true;
        } else if (word == "classes" && (ls >> a) && a > 0) {
            g.classes = static_cast<std::size_t>(a);
            saw[3] = true;
        } else if (word == "edge" && (ls >> a >> b) && a > 0 && b > 0) {
            g.edges.emplace_back(static_cast<std::size_t>(a - 1),
                                 static_cast<std::size_t>(b - 1));
        } else if (word == "chosen" || word == "cost" || word == "kept") {
            std::string rest;
            std::getline(ls, rest);
            extras.emplace_back(word, rest);
        } else {
            throw FormatError(r.path + ": unknown header line '" + word + "'");
        }
    }
    for (bool s : saw)
        if (!s) throw FormatError(r.path + ": incomplete graph description");
    g.validate();
    return g;
}

}  // namespace

void save_model(const std::string& path, const ArchGraph& arch,
                const ModelParams& params) {
    arch.validate();
    if (params.blocks.size() != arch.n || params.heads.size() != arch.n ||
        params.u.numel() != arch.n)
        throw DimensionError("parameters do not match the graph");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << kMagic << "\n" << "kind full\n";
    write_arch_lines(out, arch);
    out << "tensors " << (4 * arch.n + 1) << "\n";
    for (std::size_t j = 0; j < arch.n; ++j) {
        write_tensor(out, "block" + std::to_string(j + 1) + ".W", params.blocks[j].W);
        write_tensor(out, "block" + std::to_string(j + 1) + ".b", params.blocks[j].b);
    }
    for (std::size_t j = 0; j < arch.n; ++j) {
        write_tensor(out, "head" + std::to_string(j + 1) + ".W", params.heads[j].W);
        write_tensor(out, "head" + std::to_string(j + 1) + ".b", params.heads[j].b);
    }
    write_tensor(out, "u", params.u);
    if (!out) throw ConfigError("failed writing " + path);
}

void save_model(const std::string& path, const CutModel& m) {
    m.arch.validate();
    if (m.blocks.size() != m.arch.n)
        throw DimensionError("cut blocks do not match the pruned graph");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << kMagic << "\n" << "kind cut\n";
    write_arch_lines(out, m.arch);
    out << "chosen " << m.chosen + 1 << "\n";
    out << "cost " << m.retained_cost << "\n";
    out << "kept";
    for (std::size_t k : m.kept) out << " " << k + 1;
    out << "\n";
    out << "tensors " << (2 * m.arch.n + 2) << "\n";
    for (std::size_t j = 0; j < m.arch.n; ++j) {
        write_tensor(out, "block" + std::to_string(j + 1) + ".W", m.blocks[j].W);
        write_tensor(out, "block" + std::to_string(j + 1) + ".b", m.blocks[j].b);
    }
    write_tensor(out, "head.W", m.head.W);
    write_tensor(out, "head.b", m.head.b);
    if (!out) throw ConfigError("failed writing " + path);
}

ModelFile load_model(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw ConfigError("cannot open model file " + path);
    if (r.line() != kMagic)
        throw FormatError(path + ": not a NETCUT01 model file");
    const std::string kind_line = r.line();
    ModelFile mf;
    if (kind_line == "kind full")
        mf.is_cut = false;
    else if (kind_line == "kind cut")
        mf.is_cut = true;
    else
        throw FormatError(path + ": unknown model kind '" + kind_line + "'");

    std::size_t tensor_count = 0;
    std::vector<std::pair<std::string, std::string>> extras;
    ArchGraph arch = read_arch_lines(r, tensor_count, extras);

    if (!mf.is_cut) {
        if (!extras.empty())
            throw FormatError(path + ": unexpected cut metadata in a full model");
        if (tensor_count != 4 * arch.n + 1)
            throw FormatError(path + ": wrong tensor count for a full model");
        mf.arch = arch;
        for (std::size_t j = 0; j < arch.n; ++j) {
            DenseLayer l;
            l.W = read_named_tensor(r, "block" + std::to_string(j + 1) + ".W");
            l.b = read_named_tensor(r, "block" + std::to_string(j + 1) + ".b");
            mf.params.blocks.push_back(std::move(l));
        }
        for (std::size_t j = 0; j < arch.n; ++j) {
            DenseLayer l;
            l.W = read_named_tensor(r, "head" + std::to_string(j + 1) + ".W");
            l.b = read_named_tensor(r, "head" + std::to_string(j + 1) + ".b");
            mf.params.heads.push_back(std::move(l));
        }
        mf.params.u = read_named_tensor(r, "u");
        if (mf.params.u.numel() != arch.n)
            throw FormatError(path + ": head weight vector length mismatch");
    } else {
        if (tensor_count != 2 * arch.n + 2)
            throw FormatError(path + ": wrong tensor count for a cut model");
        mf.cut.arch = arch;
        mf.arch = arch;
        for (const auto& [key, rest] : extras) {
            std::istringstream vs(rest);
            if (key == "chosen") {
                long long v = 0;
                if (!(vs >> v) || v <= 0) throw FormatError(path + ": bad chosen id");
                mf.cut.chosen = static_cast<std::size_t>(v - 1);
            } else if (key == "cost") {
                if (!(vs >> mf.cut.retained_cost))
                    throw FormatError(path + ": bad cost value");
            } else {
                long long v = 0;
                while (vs >> v) {
                    if (v <= 0) throw FormatError(path + ": bad kept id");
                    mf.cut.kept.push_back(static_cast<std::size_t>(v - 1));
                }
            }
        }
        if (mf.cut.kept.size() != arch.n)
            throw FormatError(path + ": kept list does not match node count");
        for (std::size_t j = 0; j < arch.n; ++j) {
            DenseLayer l;
            l.W = read_named_tensor(r, "block" + std::to_string(j + 1) + ".W");
            l.b = read_named_tensor(r, "block" + std::to_string(j + 1) + ".b");
            mf.cut.blocks.push_back(std::move(l));
        }
        mf.cut.head.W = read_named_tensor(r, "head.W");
        mf.cut.head.b = read_named_tensor(r, "head.b");
    }
    char extra;
    if (r.in.read(&extra, 1))
        throw FormatError(path + ": trailing data after the last tensor");
    return mf;
}

}  // namespace netcut
