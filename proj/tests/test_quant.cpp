#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fedquant/errors.hpp"
#include "fedquant/quant.hpp"
#include "fedquant/rng.hpp"

using namespace fedquant;

namespace {

// Rank-interpolation quantile written straight from the definition
// (h = (n-1)p, linear between the straddling order statistics), kept
// independent of the library's implementation.
double quantile_oracle(std::vector<double> samples, double p) {
    std::sort(samples.begin(), samples.end());
    const double h = static_cast<double>(samples.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

} // namespace

TEST_CASE("uniform codebook places equal-width boundaries with exact endpoints") {
    const Codebook cb = bu_codebook(-1.0f, 1.0f, 4);
    REQUIRE(cb.levels() == 4);
    const std::vector<float> expected{-1.0f, -0.5f, 0.0f, 0.5f, 1.0f};
    CHECK(cb.boundaries() == expected);

    const Codebook single = bu_codebook(0.0f, 1.0f, 1);
    CHECK(single.boundaries() == std::vector<float>{0.0f, 1.0f});
    CHECK(single.midpoint(0) == 0.5f);

    const Codebook steps = bu_codebook(0.0f, 10.0f, 5);
    CHECK(steps.boundaries() == std::vector<float>{0.0f, 2.0f, 4.0f, 6.0f, 8.0f, 10.0f});

    // Endpoints are pinned even when the step is not representable.
    const Codebook awkward = bu_codebook(0.1f, 0.7f, 7);
    CHECK(awkward.boundary(0) == 0.1f);
    CHECK(awkward.boundary(7) == 0.7f);
}

TEST_CASE("uniform codebook rejects bad ranges and level counts") {
    CHECK_THROWS_AS(bu_codebook(1.0f, 1.0f, 4), degenerate_range_error);
    CHECK_THROWS_AS(bu_codebook(2.0f, 1.0f, 4), degenerate_range_error);
    CHECK_THROWS_AS(bu_codebook(0.0f, 1.0f, 0), input_error);
    // Step far below the float resolution collapses adjacent boundaries.
    CHECK_THROWS_AS(bu_codebook(1.0f, std::nextafterf(1.0f, 2.0f), 8), input_error);
}

TEST_CASE("codebook construction validates boundary lists") {
    CHECK_THROWS_AS(Codebook::from_boundaries({1.0f}), input_error);
    CHECK_THROWS_AS(Codebook::from_boundaries({0.0f, 0.0f}), input_error);
    CHECK_THROWS_AS(Codebook::from_boundaries({0.0f, 2.0f, 1.0f}), input_error);
    const float nan = std::nanf("");
    CHECK_THROWS_AS(Codebook::from_boundaries({0.0f, nan}), input_error);

    const Codebook a = Codebook::from_boundaries({0.0f, 1.0f, 2.0f});
    const Codebook b = Codebook::from_boundaries({0.0f, 1.0f, 2.0f});
    const Codebook c = Codebook::from_boundaries({0.0f, 1.0f, 3.0f});
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
}

TEST_CASE("quantile codebook matches the rank-interpolation oracle") {
    const std::vector<float> heavy{0.0f, 0.0f, 0.0f, 0.0f, 1.0f, 2.0f, 3.0f, 4.0f};
    const Codebook cb = bq_codebook(heavy, 2);
    CHECK(cb.boundaries() == std::vector<float>{0.0f, 0.5f, 4.0f});
    CHECK(cb.boundary(1) ==
          doctest::Approx(quantile_oracle({0, 0, 0, 0, 1, 2, 3, 4}, 0.5)).epsilon(1e-12));

    std::vector<float> ladder;
    for (int i = 0; i <= 10; ++i) ladder.push_back(static_cast<float>(i));
    CHECK(bq_codebook(ladder, 2).boundaries() == std::vector<float>{0.0f, 5.0f, 10.0f});

    CHECK(bq_codebook(ladder, 1).boundaries() == std::vector<float>{0.0f, 10.0f});

    CHECK_THROWS_AS(bq_codebook({2.0f, 2.0f, 2.0f}, 4), degenerate_range_error);
    CHECK_THROWS_AS(bq_codebook({}, 4), input_error);

    // Random samples, all interior boundaries against the oracle.
    RandomStream rng(41);
    std::vector<float> samples;
    std::vector<double> doubles;
    for (int i = 0; i < 200; ++i) {
        const double v = rng.next_normal();
        samples.push_back(static_cast<float>(v));
        doubles.push_back(static_cast<double>(static_cast<float>(v)));
    }
    const std::uint32_t levels = 8;
    const Codebook random_cb = bq_codebook(samples, levels);
    REQUIRE(random_cb.levels() == levels); // continuous data, no merges expected
    for (std::uint32_t j = 1; j < levels; ++j) {
        const double expected =
            quantile_oracle(doubles, static_cast<double>(j) / static_cast<double>(levels));
        CHECK(random_cb.boundary(j) == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("quantile codebook merges duplicate boundaries and stays equal-mass") {
    // 90% of the mass at one value forces several quantiles to coincide.
    std::vector<float> lumpy(90, 1.0f);
    for (int i = 0; i < 10; ++i) lumpy.push_back(2.0f + static_cast<float>(i));
    const Codebook cb = bq_codebook(lumpy, 8);
    CHECK(cb.levels() < 8);
    for (std::size_t j = 0; j + 1 <= cb.levels(); ++j) {
        CHECK(cb.boundary(j) < cb.boundary(j + 1));
    }

    // Distinct samples: every bucket holds n/L give or take one.
    RandomStream rng(7);
    std::vector<float> distinct;
    for (int i = 0; i < 120; ++i) {
        distinct.push_back(static_cast<float>(rng.next_unit() * 10.0));
    }
    const std::uint32_t levels = 6;
    const Codebook cb2 = bq_codebook(distinct, levels);
    REQUIRE(cb2.levels() == levels);
    const QuantisedLayerUpdate q = encode(distinct, cb2);
    std::vector<int> occupancy(levels, 0);
    for (std::uint32_t index : q.indices) occupancy[index]++;
    const double target = 120.0 / levels;
    for (int count : occupancy) {
        CHECK(std::abs(count - target) <= 1.0);
    }
}

TEST_CASE("encoding follows the half-open bucket convention with clamping") {
    const Codebook cb = bu_codebook(-1.0f, 1.0f, 4);
    const QuantisedLayerUpdate q = encode({0.3f, -1.0f, 1.7f, -1.5f, 1.0f, -0.5f}, cb);
    CHECK(q.levels == 4);
    CHECK(q.indices == std::vector<std::uint32_t>{2, 0, 3, 0, 3, 0});

    CHECK_THROWS_AS(encode({std::nanf("")}, cb), input_error);
}

TEST_CASE("encoding is monotone for any valid codebook") {
    RandomStream rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        RandomStream t = rng.child("trial", trial);
        std::vector<float> boundaries;
        float acc = static_cast<float>(t.next_normal());
        boundaries.push_back(acc);
        const int levels = 1 + static_cast<int>(t.next_below(12));
        for (int j = 0; j < levels; ++j) {
            acc += static_cast<float>(t.next_unit() + 0.01);
            boundaries.push_back(acc);
        }
        const Codebook cb = Codebook::from_boundaries(boundaries);
        std::vector<float> values;
        for (int i = 0; i < 200; ++i) {
            values.push_back(static_cast<float>(t.next_normal() * 2.0));
        }
        std::sort(values.begin(), values.end());
        const QuantisedLayerUpdate q = encode(values, cb);
        for (std::size_t i = 1; i < q.indices.size(); ++i) {
            CHECK(q.indices[i - 1] <= q.indices[i]);
        }
    }
}

TEST_CASE("decoding returns mid-points and validates payloads") {
    const Codebook cb = bu_codebook(-1.0f, 1.0f, 4);
    const std::vector<float> decoded = decode({{1}, 4}, cb);
    CHECK(decoded == std::vector<float>{-0.25f});

    const Codebook steps = bu_codebook(0.0f, 10.0f, 5);
    const QuantisedLayerUpdate q = encode({3.7f}, steps);
    const float back = decode(q, steps)[0];
    CHECK(back == 3.0f);
    CHECK(std::abs(back - 3.7f) <= 1.0f);

    CHECK_THROWS_AS(decode({{4}, 4}, cb), corrupt_payload_error);
    CHECK_THROWS_AS(decode({{0}, 5}, cb), corrupt_payload_error);
}

TEST_CASE("mid-points are fixed points of the codec") {
    const Codebook cb = bu_codebook(-0.75f, 1.25f, 8);
    for (std::size_t j = 0; j < cb.levels(); ++j) {
        const float mid = cb.midpoint(j);
        const QuantisedLayerUpdate q = encode({mid}, cb);
        CHECK(q.indices[0] == j);
        CHECK(decode(q, cb)[0] == mid);
    }
}

TEST_CASE("round-trip distortion stays within half a bucket width") {
    // Configurations are drawn on dyadic lattices so boundaries, mid-points
    // and the bound itself are exactly representable; values are arbitrary
    // floats inside the range.
    RandomStream rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        RandomStream t = rng.child("cfg", trial);
        const int k = 4 + static_cast<int>(t.next_below(9));         // step = 2^-k
        const std::uint32_t levels = 1 + static_cast<std::uint32_t>(t.next_below(256));
        const double step = std::ldexp(1.0, -k);
        const long m = static_cast<long>(t.next_below(8UL << k)) - (4L << k);
        const float lo = static_cast<float>(m * step);
        const float hi = static_cast<float>(m * step + levels * step);
        const Codebook cb = bu_codebook(lo, hi, levels);
        const double bound = std::ldexp(1.0, -k - 1);
        REQUIRE(bound == (static_cast<double>(hi) - lo) / (2.0 * levels));

        std::vector<float> values(2000);
        for (float& v : values) {
            v = static_cast<float>(lo + t.next_unit() * (static_cast<double>(hi) - lo));
        }
        const std::vector<float> decoded = decode(encode(values, cb), cb);
        int violations = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double err =
                std::abs(static_cast<double>(decoded[i]) - static_cast<double>(values[i]));
            if (err > bound) ++violations;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("norm-scaled encoding handles zero and on-grid vectors exactly") {
    const QsgdLayerUpdate zeros = qsgd_encode({0.0f, 0.0f, 0.0f}, 4, RandomStream(1));
    CHECK(zeros.norm == 0.0f);
    CHECK(zeros.magnitudes == std::vector<std::uint32_t>{0, 0, 0});
    CHECK(qsgd_decode(zeros, 4) == std::vector<float>{0.0f, 0.0f, 0.0f});

    for (std::uint32_t s : {1u, 2u, 7u, 64u}) {
        const QsgdLayerUpdate q = qsgd_encode({5.0f}, s, RandomStream(99));
        CHECK(q.norm == 5.0f);
        CHECK(q.magnitudes[0] == s);
        CHECK(qsgd_decode(q, s) == std::vector<float>{5.0f});
    }
}

TEST_CASE("norm-scaled decode applies sign, norm and magnitude") {
    QsgdLayerUpdate q;
    q.norm = 5.0f;
    q.signs = {0, 0, 0};
    q.magnitudes = {1, 0, 1};
    CHECK(qsgd_decode(q, 1) == std::vector<float>{5.0f, 0.0f, 5.0f});

    q.signs = {1, 0, 0};
    CHECK(qsgd_decode(q, 1) == std::vector<float>{-5.0f, 0.0f, 5.0f});

    q.magnitudes = {2, 0, 1};
    CHECK_THROWS_AS(qsgd_decode(q, 1), corrupt_payload_error);
}

TEST_CASE("norm-scaled quantiser is unbiased at one level") {
    // [3,0,4] has norm 5; at s=1 coordinate v decodes to sign(v)*5*{0,1}
    // with P(1) = |v|/5, so the Monte-Carlo mean must approach v.
    const std::vector<float> input{3.0f, 0.0f, 4.0f};
    const int trials = 10000;
    std::vector<double> sum(input.size(), 0.0);
    std::vector<double> sumsq(input.size(), 0.0);
    const RandomStream base(555);
    for (int t = 0; t < trials; ++t) {
        const QsgdLayerUpdate q = qsgd_encode(input, 1, base.child("t", t));
        const std::vector<float> decoded = qsgd_decode(q, 1);
        for (std::size_t i = 0; i < decoded.size(); ++i) {
            sum[i] += decoded[i];
            sumsq[i] += static_cast<double>(decoded[i]) * decoded[i];
        }
    }
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double mean = sum[i] / trials;
        const double var = sumsq[i] / trials - mean * mean;
        const double se = std::sqrt(var / trials);
        CHECK(std::abs(mean - input[i]) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("norm-scaled quantiser is unbiased at many levels") {
    RandomStream setup(808);
    std::vector<float> input(20);
    for (float& v : input) v = static_cast<float>(setup.next_normal() * 0.3);
    const std::uint32_t s = 64;
    const int trials = 4000;
    std::vector<double> sum(input.size(), 0.0);
    std::vector<double> sumsq(input.size(), 0.0);
    const RandomStream base(556);
    for (int t = 0; t < trials; ++t) {
        const QsgdLayerUpdate q = qsgd_encode(input, s, base.child("t", t));
        const std::vector<float> decoded = qsgd_decode(q, s);
        for (std::size_t i = 0; i < decoded.size(); ++i) {
            sum[i] += decoded[i];
            sumsq[i] += static_cast<double>(decoded[i]) * decoded[i];
        }
    }
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double mean = sum[i] / trials;
        const double var = sumsq[i] / trials - mean * mean;
        const double se = std::sqrt(var / trials);
        CHECK(std::abs(mean - input[i]) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("norm-scaled encoding is deterministic per stream") {
    std::vector<float> input{0.5f, -0.25f, 0.125f, 2.0f};
    const QsgdLayerUpdate a = qsgd_encode(input, 8, RandomStream(1234));
    const QsgdLayerUpdate b = qsgd_encode(input, 8, RandomStream(1234));
    CHECK(a.norm == b.norm);
    CHECK(a.signs == b.signs);
    CHECK(a.magnitudes == b.magnitudes);
}

TEST_CASE("update statistics report range, variance and excess kurtosis") {
    const UpdateStats flat = update_stats({1.0f, 1.0f, 1.0f});
    CHECK(flat.range == 0.0);
    CHECK(flat.variance == 0.0);
    CHECK(flat.excess_kurtosis == 0.0);

    const UpdateStats pair = update_stats({0.0f, 1.0f});
    CHECK(pair.range == 1.0);
    CHECK(pair.variance == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(update_stats({}), input_error);

    RandomStream rng(31337);
    std::vector<float> gauss(100000);
    for (float& v : gauss) v = static_cast<float>(rng.next_normal());
    const UpdateStats stats = update_stats(gauss);
    CHECK(stats.variance == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(stats.excess_kurtosis) <= 0.1);
}
