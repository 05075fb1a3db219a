#include "doctest.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "fedquant/rng.hpp"

using namespace fedquant;

TEST_CASE("mix64 avalanches and does not collide on small inputs") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t x = 0; x < 4096; ++x) {
        seen.insert(mix64(x));
    }
    CHECK(seen.size() == 4096);

    // Flipping one input bit should flip roughly half the output bits.
    double total_flips = 0.0;
    int cases = 0;
    for (std::uint64_t x = 1; x < 200; ++x) {
        for (int bit = 0; bit < 64; bit += 7) {
            const std::uint64_t a = mix64(x);
            const std::uint64_t b = mix64(x ^ (1ULL << bit));
            total_flips += std::popcount(a ^ b);
            ++cases;
        }
    }
    const double mean_flips = total_flips / cases;
    CHECK(mean_flips > 24.0);
    CHECK(mean_flips < 40.0);
}

TEST_CASE("streams with the same seed emit the same sequence") {
    RandomStream a(42);
    RandomStream b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    RandomStream c(43);
    RandomStream d(42);
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) {
        any_diff |= (c.next_u64() != d.next_u64());
    }
    CHECK(any_diff);
}

TEST_CASE("child derivation ignores how much the parent was consumed") {
    RandomStream fresh(7);
    const RandomStream before = fresh.child("work", 3, 9);

    RandomStream consumed(7);
    for (int i = 0; i < 57; ++i) consumed.next_u64();
    const RandomStream after = consumed.child("work", 3, 9);

    CHECK(before.seed() == after.seed());

    // Distinct tags and coordinates give distinct streams.
    const RandomStream base(7);
    CHECK(base.child("work", 3, 9).seed() != base.child("work", 3, 10).seed());
    CHECK(base.child("work", 3, 9).seed() != base.child("work", 4, 9).seed());
    CHECK(base.child("work").seed() != base.child("play").seed());
    CHECK(base.child("work").seed() != base.child("work", 0).seed());
}

TEST_CASE("unit draws live in the half-open unit interval") {
    RandomStream rng(88);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // SE of the mean is 1/sqrt(12n) ~ 0.002; allow four of them.
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("bounded draws are exact and uniform") {
    RandomStream rng(99);
    CHECK(rng.next_below(1) == 0);

    const std::uint64_t n = 10;
    std::vector<int> counts(n, 0);
    const int draws = 50000;
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t v = rng.next_below(n);
        REQUIRE(v < n);
        counts[static_cast<std::size_t>(v)]++;
    }
    // Chi-square with 9 degrees of freedom: 99.9th percentile is 27.88.
    const double expected = static_cast<double>(draws) / n;
    double chi2 = 0.0;
    for (int c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 27.88);
}

TEST_CASE("normal draws match the first moments") {
    RandomStream rng(123);
    const int n = 50000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.next_normal();
        REQUIRE(std::isfinite(v));
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("gamma draws are positive with the right mean") {
    for (double alpha : {0.4, 1.0, 4.5}) {
        RandomStream rng(static_cast<std::uint64_t>(alpha * 1000));
        const int n = 40000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = rng.next_gamma(alpha);
            REQUIRE(v > 0.0);
            sum += v;
        }
        // Gamma(alpha,1) has mean alpha and variance alpha: four SEs.
        const double se = std::sqrt(alpha / n);
        CHECK(std::abs(sum / n - alpha) < 4.0 * se + 1e-9);
    }
}

TEST_CASE("dirichlet draws form a probability vector") {
    RandomStream rng(2718);
    const std::size_t dim = 6;
    std::vector<double> coord_sum(dim, 0.0);
    const int draws = 5000;
    for (int i = 0; i < draws; ++i) {
        const std::vector<double> w = rng.next_dirichlet(0.7, dim);
        REQUIRE(w.size() == dim);
        double total = 0.0;
        for (double v : w) {
            REQUIRE(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t j = 0; j < dim; ++j) coord_sum[j] += w[j];
    }
    // Symmetric Dirichlet: every coordinate has mean 1/dim.
    for (std::size_t j = 0; j < dim; ++j) {
        CHECK(coord_sum[j] / draws == doctest::Approx(1.0 / dim).epsilon(0.05));
    }
}

TEST_CASE("shuffle permutes without losing elements") {
    RandomStream rng(31);
    std::vector<int> v(200);
    std::iota(v.begin(), v.end(), 0);
    const std::vector<int> original = v;
    rng.shuffle(v);
    CHECK(v != original); // astronomically unlikely to be identity
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == original);

    // Same stream state, same permutation.
    std::vector<int> w(200);
    std::iota(w.begin(), w.end(), 0);
    RandomStream rng2(31);
    rng2.shuffle(w);
    CHECK(w == v);
}
