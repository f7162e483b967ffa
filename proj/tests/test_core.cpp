#include "doctest.h"

#include <cmath>
#include <vector>

#include "charc/kernels.hpp"
#include "charc/rng.hpp"

using namespace charc;

TEST_CASE("rng: same seed, same stream; restore resumes exactly")
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    const auto state = a.save();
    std::vector<double> expected;
    for (int i = 0; i < 10; ++i) expected.push_back(a.uniform());
    Rng c(0);
    c.restore(state);
    for (double e : expected) CHECK(c.uniform() == e);
}

TEST_CASE("rng: uniform stays in [0,1) and below() in range")
{
    Rng r(7);
    std::vector<int> hist(5, 0);
    for (int i = 0; i < 50000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const auto k = r.below(5);
        REQUIRE(k < 5);
        ++hist[k];
    }
    for (int h : hist) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("derive_seed separates salts and is stable")
{
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(9, 3) == derive_seed(9, 3));
}

namespace {

std::vector<double> random_vec(Rng& r, std::size_t n)
{
    std::vector<double> v(n);
    for (auto& x : v) x = r.uniform(-1, 1);
    return v;
}

void check_table_against_generic(const kernels::KernelTable& t)
{
    const auto& g = kernels::generic_table();
    Rng r(3);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 17u, 64u, 203u}) {
        const auto a = random_vec(r, n), b = random_vec(r, n);
        CHECK(t.dot(a.data(), b.data(), n) == doctest::Approx(g.dot(a.data(), b.data(), n)).epsilon(1e-13));

        std::vector<double> y1 = b, y2 = b;
        t.axpy(0.7, a.data(), y1.data(), n);
        g.axpy(0.7, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

        const auto zs = random_vec(r, n);
        std::vector<double> d1(n), d2(n);
        t.distance3(a.data(), b.data(), zs.data(), n, 0.1, -0.2, 0.3, d1.data());
        g.distance3(a.data(), b.data(), zs.data(), n, 0.1, -0.2, 0.3, d2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(d1[i] == doctest::Approx(d2[i]).epsilon(1e-14));
    }
    for (std::size_t rows : {1u, 5u, 25u}) {
        for (std::size_t cols : {1u, 2u, 9u, 25u, 100u}) {
            const auto m = random_vec(r, rows * cols), x = random_vec(r, cols);
            std::vector<double> y1(rows), y2(rows);
            t.gemv(m.data(), rows, cols, x.data(), y1.data());
            g.gemv(m.data(), rows, cols, x.data(), y2.data());
            for (std::size_t i = 0; i < rows; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));
        }
    }
}

}  // namespace

TEST_CASE("kernels: generic reference against hand values")
{
    const auto& g = kernels::generic_table();
    const double a[] = {1, 2, 3}, b[] = {4, 5, 6};
    CHECK(g.dot(a, b, 3) == 32.0);
    const double m[] = {1, 2, 3, 4, 5, 6};
    double y[2];
    g.gemv(m, 2, 3, a, y);
    CHECK(y[0] == 14.0);
    CHECK(y[1] == 32.0);
    const double xs[] = {3}, ys[] = {4}, zs[] = {0};
    double d;
    g.distance3(xs, ys, zs, 1, 0, 0, 0, &d);
    CHECK(d == 5.0);
}

TEST_CASE("kernels: AVX2 variants match the scalar reference")
{
    const auto* t = kernels::avx2_table();
    if (!t) {
        MESSAGE("AVX2 unavailable; only the scalar table is exercised");
        return;
    }
    check_table_against_generic(*t);
}

TEST_CASE("kernels: active table is one of the known variants")
{
    const auto& a = kernels::active();
    const bool known = &a == &kernels::generic_table() || &a == kernels::avx2_table();
    CHECK(known);
}
