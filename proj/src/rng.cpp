#include "fedquant/rng.hpp"

#include <cmath>
#include <numbers>

#include "fedquant/errors.hpp"

namespace fedquant {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

RandomStream RandomStream::child(std::string_view tag) const {
    return RandomStream(mix64(seed_ ^ fnv1a(tag)));
}

RandomStream RandomStream::child(std::string_view tag, std::uint64_t a) const {
    return RandomStream(mix64(mix64(seed_ ^ fnv1a(tag)) ^ a));
}

RandomStream RandomStream::child(std::string_view tag, std::uint64_t a, std::uint64_t b) const {
    return RandomStream(mix64(mix64(mix64(seed_ ^ fnv1a(tag)) ^ a) ^ b));
}

std::uint64_t RandomStream::next_u64() {
    return engine_();
}

double RandomStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::next_below(std::uint64_t n) {
    if (n == 0) {
        throw input_error("RandomStream::next_below: n must be positive");
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) {
        v = next_u64();
    }
    return v % n;
}

double RandomStream::next_normal() {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::next_gamma(double alpha) {
    if (!(alpha > 0.0)) {
        throw input_error("RandomStream::next_gamma: alpha must be positive");
    }
    if (alpha < 1.0) {
        const double u = 1.0 - next_unit();
        return next_gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = next_normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) {
            continue;
        }
        v = v * v * v;
        const double u = 1.0 - next_unit();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

std::vector<double> RandomStream::next_dirichlet(double alpha, std::size_t n) {
    if (n == 0) {
        throw input_error("RandomStream::next_dirichlet: dimension must be positive");
    }
    std::vector<double> out(n);
    double sum = 0.0;
    for (auto& g : out) {
        g = next_gamma(alpha);
        sum += g;
    }
    if (sum <= 0.0) {
        // All-zero draw is possible only through underflow at tiny alpha.
        for (auto& g : out) {
            g = 1.0 / static_cast<double>(n);
        }
        return out;
    }
    for (auto& g : out) {
        g /= sum;
    }
    return out;
}

} // namespace fedquant
