#include "doctest.h"

#include <cmath>
#include <vector>

#include "charc/esn.hpp"
#include "charc/measures.hpp"
#include "support.hpp"

using namespace charc;

TEST_CASE("effective rank matches exact elimination on integer low-rank matrices")
{
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t m = 1 + rng.below(12), n = 1 + rng.below(12);
        const std::size_t r = rng.below(std::min(m, n) + 1);
        std::vector<std::vector<long long>> a(m, std::vector<long long>(r)), b(r, std::vector<long long>(n));
        for (auto& row : a)
            for (auto& v : row) v = static_cast<long long>(rng.below(19)) - 9;
        for (auto& row : b)
            for (auto& v : row) v = static_cast<long long>(rng.below(19)) - 9;
        std::vector<std::vector<long long>> prod(m, std::vector<long long>(n, 0));
        Eigen::MatrixXd mat(m, n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < r; ++k) prod[i][j] += a[i][k] * b[k][j];
                mat(i, j) = static_cast<double>(prod[i][j]);
            }
        CHECK(effective_rank(mat, 1e-6) == testing::exact_rank(prod));
    }
}

TEST_CASE("effective rank trivial cases")
{
    CHECK(effective_rank(Eigen::MatrixXd::Zero(5, 5), 1e-6) == 0);
    CHECK(effective_rank(Eigen::MatrixXd::Identity(6, 6), 1e-6) == 6);
    Rng rng(2);
    Eigen::MatrixXd r(10, 20);
    std::vector<std::vector<double>> rows(10, std::vector<double>(20));
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 20; ++j) rows[i][j] = r(i, j) = rng.uniform(-1, 1);
    CHECK(effective_rank(r, 1e-6) == testing::elimination_rank(rows, 1e-6));
}

TEST_CASE("zero substrate: ranks and capacity vanish")
{
    const testing::ZeroSubstrate z(6);
    MeasureConfig cfg;
    CHECK(kernel_rank(z, {}, cfg).rank == 0);
    CHECK(generalisation_rank(z, {}, cfg).rank == 0);
    CHECK(memory_capacity(z, {}, cfg).capacity == 0.0);
    const auto b = behaviour(z, {}, cfg);
    CHECK(b.kr == 0);
    CHECK(b.gr == 0);
    CHECK(b.mc == 0);
}

TEST_CASE("zero-weight ESN maps to the origin")
{
    const auto spec = SubstrateSpec::esn(5);
    auto sub = make_substrate(spec);
    Genotype g{std::vector<double>(spec.gene_count(), 0.7)};
    g.genes[spec.offset("w_scale")] = 0.0;
    g.genes[spec.offset("input_scale")] = 0.5; // decodes to 0
    const auto b = behaviour(*sub, g, MeasureConfig{});
    CHECK(b == BehaviourPoint{0, 0, 0, false});
}

TEST_CASE("generalisation rank without noise is one")
{
    const testing::DelayLineSubstrate line(8, 0);
    MeasureConfig cfg;
    cfg.gr_noise = 0.0;
    CHECK(generalisation_rank(line, {}, cfg).rank == 1);
}

TEST_CASE("generalisation rank of an input window equals the noise-matrix rank")
{
    for (std::size_t depth : {3u, 8u, 15u}) {
        for (std::size_t streams : {4u, 8u, 20u}) {
            const testing::DelayLineSubstrate window(depth, 0);
            MeasureConfig cfg;
            cfg.streams = streams;
            cfg.seed = 5 + depth;
            // Regenerate the stream set independently and rank its last `depth` samples.
            Rng rng(derive_seed(cfg.seed, 12));
            std::vector<double> base(cfg.stream_len());
            for (auto& v : base) v = rng.uniform(-1, 1);
            std::vector<std::vector<double>> cols(streams, base);
            for (std::size_t j = 1; j < streams; ++j)
                for (auto& v : cols[j]) v += rng.uniform(-0.1, 0.1);
            std::vector<std::vector<double>> m(depth, std::vector<double>(streams));
            for (std::size_t i = 0; i < depth; ++i)
                for (std::size_t j = 0; j < streams; ++j) m[i][j] = cols[j][cols[j].size() - 1 - i];
            CHECK(generalisation_rank(window, {}, cfg).rank == testing::elimination_rank(m, 1e-6));
        }
    }
}

TEST_CASE("perfect delay line: capacity equals depth, ranks equal depth")
{
    const testing::DelayLineSubstrate line(12);
    MeasureConfig cfg;
    const auto mc = memory_capacity(line, {}, cfg);
    CHECK(std::abs(mc.capacity - 12.0) < 0.1);
    REQUIRE(mc.per_delay.size() == 24);
    for (std::size_t k = 0; k < 12; ++k) CHECK(mc.per_delay[k] > 0.999);
    CHECK(kernel_rank(line, {}, cfg).rank == 12);
    CHECK(generalisation_rank(line, {}, cfg).rank == 12);
}

TEST_CASE("ESN behaviours: KR within bound, MC within bound, rerun identical")
{
    const auto spec = SubstrateSpec::esn(12);
    const auto sub = make_substrate(spec);
    MeasureConfig cfg;
    Rng rng(8);
    for (int i = 0; i < 5; ++i) {
        const auto g = random_genotype(spec, rng);
        const auto b = behaviour(*sub, g, cfg);
        CHECK(b.kr <= 12);
        CHECK(b.gr <= 12);
        CHECK(b.mc <= 12 * 1.05);
        CHECK(behaviour(*sub, g, cfg) == b);
    }
}

TEST_CASE("ordered-regime ESNs generalise at least as well as they separate")
{
    const auto spec = SubstrateSpec::esn(15);
    const auto sub = make_substrate(spec);
    MeasureConfig cfg;
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        auto g = random_genotype(spec, rng);
        g.genes[spec.offset("w_scale")] = 0.05; // scaling 0.1
        CHECK(generalisation_rank(*sub, g, cfg).rank <= kernel_rank(*sub, g, cfg).rank);
    }
}
