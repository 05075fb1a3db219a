#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace fedquant {

// splitmix64 finaliser; good avalanche, used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

// Deterministic random stream with hierarchical derivation.
//
// Child streams are keyed by (parent seed, purpose tag, coordinates), never
// by how much the parent has been consumed, so per-client streams are
// identical whether clients run serially or in parallel. The base engine is
// std::mt19937_64 (bit-exact by the standard); all distributions are
// implemented here because the std ones are implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    RandomStream child(std::string_view tag) const;
    RandomStream child(std::string_view tag, std::uint64_t a) const;
    RandomStream child(std::string_view tag, std::uint64_t a, std::uint64_t b) const;

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double next_unit();
    // Uniform integer in [0, n), rejection-sampled so it is exactly uniform.
    std::uint64_t next_below(std::uint64_t n);
    // Standard normal via Box-Muller (one value per call).
    double next_normal();
    // Gamma(alpha, 1) via Marsaglia-Tsang; alpha < 1 boosted through alpha+1.
    double next_gamma(double alpha);
    // Symmetric Dirichlet(alpha) of dimension n.
    std::vector<double> next_dirichlet(double alpha, std::size_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(next_below(i))]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace fedquant
