#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kge/error.hpp"
#include "kge/stats.hpp"

using namespace kge;

TEST_CASE("pearson fixtures") {
    CHECK(*pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) ==
          doctest::Approx(-1.0).epsilon(1e-15));
    // cov 4, variances 5 and 5 -> 0.8
    CHECK(*pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
          doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("pearson on a constant series is an explicit undefined outcome") {
    CHECK_FALSE(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}));
    CHECK_FALSE(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}));
}

TEST_CASE("pearson validates lengths and finiteness") {
    CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), DataError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}),
                    DataError);
    CHECK_THROWS_AS(
        pearson(std::vector<double>{1, std::nan("")}, std::vector<double>{1, 2}),
        DataError);
}

TEST_CASE("spearman fixtures") {
    // strictly increasing monotone map of x gives exactly 1
    std::vector<double> x{-2, -1, 0, 1, 2};
    std::vector<double> y;
    for (double v : x) y.push_back(v * v * v);
    CHECK(*spearman(x, y) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
          doctest::Approx(0.8).epsilon(1e-15));
    CHECK_FALSE(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{7, 7, 7}));
}

TEST_CASE("fractional ranks average over tie blocks") {
    std::vector<double> ranks = fractional_ranks(std::vector<double>{3.0, 1.0, 3.0, 2.0});
    CHECK(ranks == std::vector<double>{3.5, 1.0, 3.5, 2.0});
    ranks = fractional_ranks(std::vector<double>{5.0, 5.0, 5.0});
    CHECK(ranks == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("correlation symmetry") {
    Rng rng(50);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + rng.below(20);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back(rng.uniform(-5, 5));
            y.push_back(rng.uniform(-5, 5));
        }
        auto pxy = pearson(x, y);
        auto pyx = pearson(y, x);
        REQUIRE(pxy.has_value() == pyx.has_value());
        if (pxy) CHECK(*pxy == doctest::Approx(*pyx).epsilon(1e-12));
        auto sxy = spearman(x, y);
        auto syx = spearman(y, x);
        if (sxy) CHECK(*sxy == doctest::Approx(*syx).epsilon(1e-12));
    }
}

TEST_CASE("pearson affine invariance: pearson(ax+b, y) = sign(a) pearson(x, y)") {
    Rng rng(51);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 3 + rng.below(15);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back(rng.uniform(-5, 5));
            y.push_back(rng.uniform(-5, 5));
        }
        double a = rng.uniform(-3, 3);
        if (std::abs(a) < 1e-3) a = 1.0;
        double b = rng.uniform(-10, 10);
        std::vector<double> ax;
        for (double v : x) ax.push_back(a * v + b);
        auto base = pearson(x, y);
        auto scaled = pearson(ax, y);
        if (base && scaled)
            CHECK(*scaled == doctest::Approx((a > 0 ? 1.0 : -1.0) * *base).epsilon(1e-9));
    }
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
    Rng rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 3 + rng.below(15);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) {
            // draw from a small grid so ties occur
            x.push_back(static_cast<double>(rng.below(6)));
            y.push_back(rng.uniform(-5, 5));
        }
        std::vector<double> tx;
        for (double v : x) tx.push_back(std::exp(v) + v);  // strictly increasing
        auto base = spearman(x, y);
        auto mapped = spearman(tx, y);
        REQUIRE(base.has_value() == mapped.has_value());
        if (base) CHECK(*mapped == doctest::Approx(*base).epsilon(1e-12));
    }
}

TEST_CASE("pearson and spearman match definitional brute force on random pairs") {
    Rng rng(53);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng.below(49);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) {
            // mix continuous and gridded values so ties appear
            x.push_back(rng.below(3) == 0 ? static_cast<double>(rng.below(5))
                                          : rng.uniform(-2, 2));
            y.push_back(rng.below(3) == 0 ? static_cast<double>(rng.below(5))
                                          : rng.uniform(-2, 2));
        }
        auto p = pearson(x, y);
        if (!p) continue;  // constant series drawn
        CHECK(*p == doctest::Approx(kgetest::pearson_bruteforce(x, y)).epsilon(1e-10));

        auto s = spearman(x, y);
        auto rx = kgetest::ranks_bruteforce(x);
        auto ry = kgetest::ranks_bruteforce(y);
        auto expected = pearson(rx, ry);
        REQUIRE(s.has_value() == expected.has_value());
        if (s) CHECK(*s == doctest::Approx(*expected).epsilon(1e-10));
    }
}

TEST_CASE("two-point series correlate to exactly +/-1") {
    CHECK(std::abs(*pearson(std::vector<double>{1, 2}, std::vector<double>{5, 3})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(*spearman(std::vector<double>{1, 2}, std::vector<double>{5, 3})) ==
          doctest::Approx(1.0).epsilon(1e-12));
}
