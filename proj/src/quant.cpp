#include "fedquant/quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fedquant/errors.hpp"

namespace fedquant {

Codebook Codebook::from_boundaries(std::vector<float> boundaries) {
    if (boundaries.size() < 2) {
        throw input_error("Codebook::from_boundaries: need at least two boundaries");
    }
    for (std::size_t j = 0; j + 1 < boundaries.size(); ++j) {
        if (!(boundaries[j] < boundaries[j + 1])) {
            throw input_error("Codebook::from_boundaries: boundaries must be strictly increasing");
        }
        if (!std::isfinite(boundaries[j]) || !std::isfinite(boundaries[j + 1])) {
            throw input_error("Codebook::from_boundaries: boundaries must be finite");
        }
    }
    return Codebook(std::move(boundaries));
}

float Codebook::midpoint(std::size_t bucket) const {
    return static_cast<float>(
        (static_cast<double>(boundaries_[bucket]) + static_cast<double>(boundaries_[bucket + 1])) /
        2.0);
}

std::uint64_t Codebook::digest() const {
    std::uint64_t h = 1469598103934665603ull;
    for (float b : boundaries_) {
        std::uint32_t bits;
        std::memcpy(&bits, &b, sizeof(bits));
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xFFu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

Codebook bu_codebook(float lo, float hi, std::uint32_t levels) {
    if (levels == 0) {
        throw input_error("bu_codebook: levels must be positive");
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw input_error("bu_codebook: bounds must be finite");
    }
    if (!(lo < hi)) {
        throw degenerate_range_error("bu_codebook: lo must be strictly below hi");
    }
    std::vector<float> b(static_cast<std::size_t>(levels) + 1);
    const double step = (static_cast<double>(hi) - static_cast<double>(lo)) /
                        static_cast<double>(levels);
    b.front() = lo;
    b.back() = hi;
    for (std::uint32_t j = 1; j < levels; ++j) {
        b[j] = static_cast<float>(static_cast<double>(lo) + step * static_cast<double>(j));
    }
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
        if (!(b[j] < b[j + 1])) {
            throw input_error("bu_codebook: levels too large for the value range (boundaries collide)");
        }
    }
    return Codebook::from_boundaries(std::move(b));
}

namespace {

double quantile_sorted(const std::vector<float>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const std::size_t i = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(i);
    if (i + 1 >= sorted.size()) {
        return static_cast<double>(sorted.back());
    }
    return static_cast<double>(sorted[i]) +
           frac * (static_cast<double>(sorted[i + 1]) - static_cast<double>(sorted[i]));
}

} // namespace

Codebook bq_codebook(const std::vector<float>& samples, std::uint32_t levels) {
    if (levels == 0) {
        throw input_error("bq_codebook: levels must be positive");
    }
    if (samples.size() < 2) {
        throw input_error("bq_codebook: need at least two samples");
    }
    for (float v : samples) {
        if (!std::isfinite(v)) {
            throw input_error("bq_codebook: samples must be finite");
        }
    }
    std::vector<float> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw degenerate_range_error("bq_codebook: all samples are equal");
    }
    std::vector<float> b;
    b.reserve(static_cast<std::size_t>(levels) + 1);
    b.push_back(sorted.front());
    for (std::uint32_t j = 1; j < levels; ++j) {
        b.push_back(static_cast<float>(
            quantile_sorted(sorted, static_cast<double>(j) / static_cast<double>(levels))));
    }
    b.push_back(sorted.back());
    // Heavy mass duplicates quantiles; merging shrinks the effective levels.
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return Codebook::from_boundaries(std::move(b));
}

QuantisedLayerUpdate encode(const std::vector<float>& values, const Codebook& book) {
    QuantisedLayerUpdate out;
    out.levels = static_cast<std::uint32_t>(book.levels());
    out.indices.reserve(values.size());
    const auto& b = book.boundaries();
    for (float v : values) {
        if (std::isnan(v)) {
            throw input_error("encode: NaN value");
        }
        // First boundary >= v; (b_j, b_{j+1}] buckets with end clamping.
        const auto it = std::lower_bound(b.begin(), b.end(), v);
        std::size_t idx;
        if (it == b.begin()) {
            idx = 0;
        } else if (it == b.end()) {
            idx = book.levels() - 1;
        } else {
            idx = static_cast<std::size_t>(it - b.begin()) - 1;
        }
        out.indices.push_back(static_cast<std::uint32_t>(idx));
    }
    return out;
}

std::vector<float> decode(const QuantisedLayerUpdate& q, const Codebook& book) {
    if (q.levels != book.levels()) {
        throw corrupt_payload_error("decode: payload level count does not match codebook");
    }
    std::vector<float> out;
    out.reserve(q.indices.size());
    for (std::uint32_t idx : q.indices) {
        if (idx >= book.levels()) {
            throw corrupt_payload_error("decode: index out of range");
        }
        out.push_back(book.midpoint(idx));
    }
    return out;
}

QsgdLayerUpdate qsgd_encode(const std::vector<float>& values, std::uint32_t levels,
                            RandomStream rng) {
    if (levels == 0) {
        throw input_error("qsgd_encode: levels must be positive");
    }
    QsgdLayerUpdate out;
    out.signs.reserve(values.size());
    out.magnitudes.reserve(values.size());
    double norm_sq = 0.0;
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw input_error("qsgd_encode: values must be finite");
        }
        norm_sq += static_cast<double>(v) * static_cast<double>(v);
    }
    // The decoder sees the f32 norm, so scale by the same value here to
    // keep the scheme exactly unbiased end to end.
    out.norm = static_cast<float>(std::sqrt(norm_sq));
    const double norm = static_cast<double>(out.norm);
    for (float v : values) {
        out.signs.push_back(v < 0.0f ? 1 : 0);
        if (norm == 0.0) {
            out.magnitudes.push_back(0);
            continue;
        }
        double r = std::abs(static_cast<double>(v)) / norm * static_cast<double>(levels);
        r = std::min(r, static_cast<double>(levels));
        std::uint32_t l = static_cast<std::uint32_t>(r);
        const double p = r - static_cast<double>(l);
        if (p > 0.0 && rng.next_unit() < p) {
            ++l;
        }
        out.magnitudes.push_back(l);
    }
    return out;
}

std::vector<float> qsgd_decode(const QsgdLayerUpdate& q, std::uint32_t levels) {
    if (levels == 0) {
        throw input_error("qsgd_decode: levels must be positive");
    }
    if (q.signs.size() != q.magnitudes.size()) {
        throw corrupt_payload_error("qsgd_decode: sign/magnitude count mismatch");
    }
    std::vector<float> out;
    out.reserve(q.magnitudes.size());
    for (std::size_t i = 0; i < q.magnitudes.size(); ++i) {
        if (q.magnitudes[i] > levels) {
            throw corrupt_payload_error("qsgd_decode: magnitude above level count");
        }
        double v = static_cast<double>(q.norm) * static_cast<double>(q.magnitudes[i]) /
                   static_cast<double>(levels);
        if (q.signs[i]) {
            v = -v;
        }
        out.push_back(static_cast<float>(v));
    }
    return out;
}

UpdateStats update_stats(const std::vector<float>& values) {
    if (values.empty()) {
        throw input_error("update_stats: empty input");
    }
    double mn = values[0];
    double mx = values[0];
    double mean = 0.0;
    for (float v : values) {
        mn = std::min(mn, static_cast<double>(v));
        mx = std::max(mx, static_cast<double>(v));
        mean += static_cast<double>(v);
    }
    mean /= static_cast<double>(values.size());
    double m2 = 0.0;
    double m4 = 0.0;
    for (float v : values) {
        const double d = static_cast<double>(v) - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(values.size());
    m4 /= static_cast<double>(values.size());
    UpdateStats s;
    s.range = mx - mn;
    s.variance = m2;
    s.excess_kurtosis = (m2 > 0.0) ? (m4 / (m2 * m2) - 3.0) : 0.0;
    return s;
}

} // namespace fedquant
