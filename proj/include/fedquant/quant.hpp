#pragma once

#include <cstdint>
#include <vector>

#include "fedquant/rng.hpp"

namespace fedquant {

// Bucketed scalar quantiser: L buckets delimited by L+1 strictly increasing
// boundaries. Value u encodes to bucket j when u is in (b_j, b_{j+1}]; the
// lowest bucket is closed below (u <= b_0 -> 0) and values above b_L clamp
// to bucket L-1. Decoding returns the bucket mid-point (b_j + b_{j+1}) / 2.
class Codebook {
public:
    static Codebook from_boundaries(std::vector<float> boundaries);

    std::size_t levels() const { return boundaries_.size() - 1; }
    float lo() const { return boundaries_.front(); }
    float hi() const { return boundaries_.back(); }
    float boundary(std::size_t j) const { return boundaries_[j]; }
    const std::vector<float>& boundaries() const { return boundaries_; }
    float midpoint(std::size_t bucket) const;
    // FNV-1a over boundary bit patterns; used as a coherence digest.
    std::uint64_t digest() const;

private:
    explicit Codebook(std::vector<float> boundaries) : boundaries_(std::move(boundaries)) {}
    std::vector<float> boundaries_;
};

// Equal-width buckets over [lo, hi]: b_j = lo + j * (hi - lo) / levels,
// with b_0 = lo and b_levels = hi exactly.
Codebook bu_codebook(float lo, float hi, std::uint32_t levels);

// Equal-mass buckets from empirical quantiles of `samples` (linear
// interpolation at rank h = (n-1) * p). Duplicate boundaries produced by
// heavy value mass are merged, reducing the effective level count.
Codebook bq_codebook(const std::vector<float>& samples, std::uint32_t levels);

struct QuantisedLayerUpdate {
    std::vector<std::uint32_t> indices;
    std::uint32_t levels = 0;
};

QuantisedLayerUpdate encode(const std::vector<float>& values, const Codebook& book);
std::vector<float> decode(const QuantisedLayerUpdate& q, const Codebook& book);

// Norm-scaled stochastic quantiser: per value, keep the sign and round
// |v| / norm * levels stochastically to an integer magnitude in [0, levels]
// so the decoded value norm * sign * magnitude / levels is unbiased.
struct QsgdLayerUpdate {
    float norm = 0.0f;                    // layer l2 norm, f32 on the wire
    std::vector<std::uint8_t> signs;      // 1 = negative
    std::vector<std::uint32_t> magnitudes;
};

QsgdLayerUpdate qsgd_encode(const std::vector<float>& values, std::uint32_t levels,
                            RandomStream rng);
std::vector<float> qsgd_decode(const QsgdLayerUpdate& q, std::uint32_t levels);

// range = max - min; variance is the population variance; excess kurtosis
// is m4 / m2^2 - 3, defined as 0 for zero-variance input.
struct UpdateStats {
    double range = 0.0;
    double variance = 0.0;
    double excess_kurtosis = 0.0;
};

UpdateStats update_stats(const std::vector<float>& values);

} // namespace fedquant
