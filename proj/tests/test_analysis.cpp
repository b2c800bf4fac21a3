#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "netcut/analysis.hpp"
#include "netcut/rng.hpp"

using namespace netcut;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

struct Scene {
    ArchGraph arch;
    ModelParams params;
    Tensor batch;
    std::vector<std::size_t> labels;
};

Scene make_scene(std::size_t n_nodes, std::uint64_t seed) {
    Scene s{build_chain(n_nodes, 8, 6, 3), {}, Tensor::zeros({12, 6}), {}};
    s.params = init_params(s.arch, 1.0, seed);
    Rng rng(Rng::derive(seed, 99));
    for (double& v : s.batch.values) v = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < 12; ++i) s.labels.push_back(rng.below(3));
    return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0;
    for (std::size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("parameter selectors parse and print 1-based names") {
    const ParamSelector u = ParamSelector::parse("u", 4);
    CHECK(u.kind == ParamSelector::Kind::U);
    CHECK(u.name() == "u");

    const ParamSelector bw = ParamSelector::parse("block1.W", 4);
    CHECK(bw.kind == ParamSelector::Kind::BlockW);
    CHECK(bw.index == 0);
    CHECK(bw.name() == "block1.W");

    const ParamSelector bb = ParamSelector::parse("block3.b", 4);
    CHECK(bb.kind == ParamSelector::Kind::BlockB);
    CHECK(bb.index == 2);

    const ParamSelector hw = ParamSelector::parse("head4.W", 4);
    CHECK(hw.kind == ParamSelector::Kind::HeadW);
    CHECK(hw.index == 3);
    CHECK(hw.name() == "head4.W");

    const ParamSelector hb = ParamSelector::parse("head2.b", 4);
    CHECK(hb.kind == ParamSelector::Kind::HeadB);
    CHECK(hb.index == 1);
    CHECK(hb.name() == "head2.b");
}

TEST_CASE("malformed or out-of-range selectors are rejected") {
    CHECK_THROWS_AS(ParamSelector::parse("block5.W", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("head5.b", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("block0.W", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("block1.Q", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("block1", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("block.W", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("layer1.W", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("U", 4), ConfigError);
    CHECK_THROWS_AS(ParamSelector::parse("block2x.W", 4), ConfigError);
}

TEST_CASE("cosine similarity handles the textbook cases") {
    const Tensor a = Tensor::vec({1, 2, 3});
    const Tensor b = Tensor::vec({2, 4, 6});
    CHECK(cosine_similarity(a, b) == doctest::Approx(1.0).epsilon(1e-12));

    const Tensor neg = Tensor::vec({-1, -2, -3});
    CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));

    const Tensor x = Tensor::vec({1, 0});
    const Tensor y = Tensor::vec({0, 5});
    CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));

    CHECK_THROWS_AS(cosine_similarity(Tensor::vec({0, 0}), x), NumericError);
    CHECK_THROWS_AS(cosine_similarity(x, Tensor::vec({0, 0})), NumericError);
    CHECK_THROWS_AS(cosine_similarity(a, x), DimensionError);
}

TEST_CASE("per-head partials sum to the full gradient") {
    const Scene s = make_scene(4, 21);
    const std::vector<std::string> selectors = {"block1.W", "block2.b", "head2.W",
                                                "head4.b"};
    for (const Scheme scheme : {Scheme::Log, Scheme::Prob}) {
        for (const std::string& name : selectors) {
            const ParamSelector sel = ParamSelector::parse(name, s.arch.n);
            const Tensor full =
                full_gradient(s.arch, s.params, s.batch, s.labels, sel, scheme, 0.0);
            Tensor sum = Tensor::zeros(full.shape);
            for (std::size_t k = 0; k < s.arch.n; ++k) {
                const Tensor part = partial_gradient(s.arch, s.params, s.batch,
                                                     s.labels, k, sel, scheme, 0.0);
                for (std::size_t i = 0; i < sum.numel(); ++i) sum.values[i] += part[i];
            }
            CAPTURE(name);
            CHECK(max_abs_diff(sum, full) < 1e-8);
        }
    }
}

TEST_CASE("the depth penalty leaves block partials intact") {
    const Scene s = make_scene(4, 22);
    const ParamSelector sel = ParamSelector::parse("block1.W", s.arch.n);
    const Tensor full =
        full_gradient(s.arch, s.params, s.batch, s.labels, sel, Scheme::Log, 0.05);
    Tensor sum = Tensor::zeros(full.shape);
    for (std::size_t k = 0; k < s.arch.n; ++k) {
        const Tensor part = partial_gradient(s.arch, s.params, s.batch, s.labels, k,
                                             sel, Scheme::Log, 0.05);
        for (std::size_t i = 0; i < sum.numel(); ++i) sum.values[i] += part[i];
    }
    CHECK(max_abs_diff(sum, full) < 1e-8);
}

TEST_CASE("with one-hot head weights the chosen partial is the full gradient") {
    Scene s = make_scene(4, 23);
    s.params.u = init_head_weights(InitScheme::Last, 4, 500.0);
    const ParamSelector sel = ParamSelector::parse("block1.W", s.arch.n);
    const Tensor full =
        full_gradient(s.arch, s.params, s.batch, s.labels, sel, Scheme::Log, 0.0);
    const Tensor part = partial_gradient(s.arch, s.params, s.batch, s.labels, 3, sel,
                                         Scheme::Log, 0.0);
    CHECK(max_abs_diff(part, full) < 1e-10);
}

TEST_CASE("a selector outside a head's subgraph yields a zero partial") {
    // on a chain, head 1 sees only block 1, so block 3 is out of reach
    const Scene s = make_scene(4, 24);
    const ParamSelector sel = ParamSelector::parse("block3.W", s.arch.n);
    const Tensor part = partial_gradient(s.arch, s.params, s.batch, s.labels, 0, sel,
                                         Scheme::Log, 0.0);
    for (std::size_t i = 0; i < part.numel(); ++i) CHECK(part[i] == 0.0);

    const Tensor live = partial_gradient(s.arch, s.params, s.batch, s.labels, 3, sel,
                                         Scheme::Log, 0.0);
    double norm = 0;
    for (std::size_t i = 0; i < live.numel(); ++i) norm += live[i] * live[i];
    CHECK(norm > 0.0);

    CHECK_THROWS_AS(partial_gradient(s.arch, s.params, s.batch, s.labels, 9, sel,
                                     Scheme::Log, 0.0),
                    IndexError);
}

TEST_CASE("gradient reports are symmetric with a unit diagonal") {
    const Scene s = make_scene(4, 25);
    const ParamSelector sel = ParamSelector::parse("block1.W", s.arch.n);
    const GradientReport rep =
        gradient_report(s.arch, s.params, s.batch, s.labels, sel, Scheme::Log, 0.0);
    CHECK(rep.heads == 4);
    CHECK(rep.batch_rows == 12);
    CHECK(rep.selector.name() == "block1.W");
    REQUIRE(rep.rho_full.size() == 4);
    REQUIRE(rep.rho.size() == 4);
    for (std::size_t a = 0; a < 4; ++a) {
        CHECK(rep.rho[a][a] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(rep.rho_full[a]) <= 1.0 + 1e-12);
        for (std::size_t b = 0; b < 4; ++b) CHECK(rep.rho[a][b] == rep.rho[b][a]);
    }
}

TEST_CASE("spiking one head aligns its partial with the full gradient") {
    Scene s = make_scene(5, 26);
    s.params.u = init_head_weights(InitScheme::Last, 5, 12.0);
    const ParamSelector sel = ParamSelector::parse("block1.W", s.arch.n);
    const GradientReport rep =
        gradient_report(s.arch, s.params, s.batch, s.labels, sel, Scheme::Log, 0.0);
    CHECK(rep.rho_full[4] >= 0.99);
}

TEST_CASE("unreachable selectors surface as gaps in the report") {
    const Scene s = make_scene(4, 27);
    const ParamSelector sel = ParamSelector::parse("block3.W", s.arch.n);
    const GradientReport rep =
        gradient_report(s.arch, s.params, s.batch, s.labels, sel, Scheme::Log, 0.0);
    // heads 1 and 2 never touch block 3
    CHECK(std::isnan(rep.rho_full[0]));
    CHECK(std::isnan(rep.rho_full[1]));
    CHECK_FALSE(std::isnan(rep.rho_full[2]));
    CHECK_FALSE(std::isnan(rep.rho_full[3]));
    CHECK(std::isnan(rep.rho[0][0]));
    CHECK(std::isnan(rep.rho[0][3]));
    CHECK_FALSE(std::isnan(rep.rho[2][3]));
}

TEST_CASE("rho CSVs carry the header comment and spell gaps out") {
    const Scene s = make_scene(4, 28);
    const ParamSelector sel = ParamSelector::parse("block3.W", s.arch.n);
    const GradientReport rep =
        gradient_report(s.arch, s.params, s.batch, s.labels, sel, Scheme::Log, 0.0);

    const TempFile vec_file("rho_vec.csv");
    write_rho_vector_csv(vec_file.path, rep);
    {
        std::ifstream in(vec_file.path);
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == "# selector=block3.W batch=12");
        REQUIRE(std::getline(in, line));
        CHECK(line == "head,rho_vs_full");
        std::vector<std::string> rows;
        while (std::getline(in, line)) rows.push_back(line);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0] == "1,gap");
        CHECK(rows[1] == "2,gap");
        for (std::size_t k = 2; k < 4; ++k) {
            std::istringstream row(rows[k]);
            std::string cell;
            std::getline(row, cell, ',');
            CHECK(std::stoul(cell) == k + 1);
            std::getline(row, cell, ',');
            CHECK(std::stod(cell) ==
                  doctest::Approx(rep.rho_full[k]).epsilon(1e-4));
        }
    }

    const TempFile mat_file("rho_mat.csv");
    write_rho_matrix_csv(mat_file.path, rep);
    {
        std::ifstream in(mat_file.path);
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line == "# selector=block3.W batch=12");
        REQUIRE(std::getline(in, line));
        CHECK(line == ",1,2,3,4");
        std::vector<std::string> rows;
        while (std::getline(in, line)) rows.push_back(line);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0] == "1,gap,gap,gap,gap");
        std::istringstream row(rows[2]);
        std::string cell;
        std::getline(row, cell, ',');
        CHECK(cell == "3");
        std::getline(row, cell, ',');
        CHECK(cell == "gap");
        std::getline(row, cell, ',');
        CHECK(cell == "gap");
        std::getline(row, cell, ',');
        CHECK(std::stod(cell) == doctest::Approx(1.0).epsilon(1e-9));
        std::getline(row, cell, ',');
        CHECK(std::stod(cell) == doctest::Approx(rep.rho[2][3]).epsilon(1e-4));
    }
}
