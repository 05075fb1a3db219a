#include "fedquant/costing.hpp"

#include <bit>

#include "fedquant/errors.hpp"

namespace fedquant {

std::uint32_t index_bit_width(std::uint32_t levels) {
    if (levels == 0) {
        throw input_error("index_bit_width: levels must be positive");
    }
    return levels == 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(levels - 1));
}

PackedPayload pack_indices(const std::vector<std::uint32_t>& indices, std::uint32_t width) {
    if (width > 32) {
        throw input_error("pack_indices: width above 32 bits");
    }
    PackedPayload out;
    out.width = width;
    out.bit_length = static_cast<std::uint64_t>(indices.size()) * width;
    out.bytes.assign((out.bit_length + 7) / 8, 0);
    if (width == 0) {
        for (std::uint32_t idx : indices) {
            if (idx != 0) {
                throw input_error("pack_indices: nonzero index at width 0");
            }
        }
        return out;
    }
    const std::uint64_t mask = (width == 32) ? 0xFFFFFFFFull : ((1ull << width) - 1ull);
    std::uint64_t bitpos = 0;
    for (std::uint32_t idx : indices) {
        if (static_cast<std::uint64_t>(idx) > mask) {
            throw input_error("pack_indices: index does not fit the bit width");
        }
        std::uint64_t v = idx;
        std::uint32_t remaining = width;
        while (remaining > 0) {
            const std::size_t byte = static_cast<std::size_t>(bitpos >> 3);
            const std::uint32_t offset = static_cast<std::uint32_t>(bitpos & 7u);
            const std::uint32_t take = std::min(8u - offset, remaining);
            out.bytes[byte] = static_cast<std::uint8_t>(
                out.bytes[byte] | ((v & ((1ull << take) - 1ull)) << offset));
            v >>= take;
            remaining -= take;
            bitpos += take;
        }
    }
    return out;
}

std::vector<std::uint32_t> unpack_indices(const PackedPayload& payload, std::size_t count,
                                          std::uint32_t width) {
    if (width > 32) {
        throw input_error("unpack_indices: width above 32 bits");
    }
    const std::uint64_t need = static_cast<std::uint64_t>(count) * width;
    if (payload.bit_length < need || payload.bytes.size() * 8 < need) {
        throw corrupt_payload_error("unpack_indices: payload truncated");
    }
    std::vector<std::uint32_t> out(count, 0);
    if (width == 0) {
        return out;
    }
    std::uint64_t bitpos = 0;
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t v = 0;
        std::uint32_t got = 0;
        while (got < width) {
            const std::size_t byte = static_cast<std::size_t>(bitpos >> 3);
            const std::uint32_t offset = static_cast<std::uint32_t>(bitpos & 7u);
            const std::uint32_t take = std::min(8u - offset, width - got);
            const std::uint64_t chunk =
                (static_cast<std::uint64_t>(payload.bytes[byte]) >> offset) &
                ((1ull << take) - 1ull);
            v |= chunk << got;
            got += take;
            bitpos += take;
        }
        out[k] = static_cast<std::uint32_t>(v);
    }
    return out;
}

CodebookCostSpec CodebookCostSpec::uniform(std::uint32_t levels, std::uint32_t refresh) {
    if (levels == 0 || refresh == 0) {
        throw input_error("CodebookCostSpec::uniform: levels and refresh must be positive");
    }
    CodebookCostSpec s;
    s.levels = {levels};
    s.refresh = {refresh};
    s.shared = true;
    return s;
}

CodebookCostSpec CodebookCostSpec::per_layer(std::vector<std::uint32_t> levels,
                                             std::vector<std::uint32_t> refresh) {
    if (levels.empty() || levels.size() != refresh.size()) {
        throw input_error("CodebookCostSpec::per_layer: levels/refresh lists must match");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] == 0 || refresh[i] == 0) {
            throw input_error("CodebookCostSpec::per_layer: levels and refresh must be positive");
        }
    }
    CodebookCostSpec s;
    s.levels = std::move(levels);
    s.refresh = std::move(refresh);
    s.shared = false;
    return s;
}

namespace {

CostBreakdown coded_cost(const ModelSpec& spec, std::uint32_t boundary_bits,
                         const CodebookCostSpec& code) {
    const auto dims = spec.layer_dims();
    if (!code.shared && code.levels.size() != dims.size()) {
        throw input_error("coded_cost: per-layer levels list does not match the layer count");
    }
    CostBreakdown out;
    for (std::size_t l = 0; l < dims.size(); ++l) {
        const std::uint32_t levels = code.shared ? code.levels[0] : code.levels[l];
        out.index_bits += static_cast<std::int64_t>(dims[l]) * index_bit_width(levels);
    }
    if (code.shared) {
        out.codebook_bits = Rational(static_cast<std::int64_t>(boundary_bits) * code.levels[0],
                                     static_cast<std::int64_t>(code.refresh[0]));
    } else {
        for (std::size_t l = 0; l < dims.size(); ++l) {
            out.codebook_bits += Rational(
                static_cast<std::int64_t>(boundary_bits) * code.levels[l],
                static_cast<std::int64_t>(code.refresh[l]));
        }
    }
    return out;
}

} // namespace

BaselineCost baseline_cost(const ModelSpec& spec) {
    const std::int64_t d = static_cast<std::int64_t>(spec.total_dim());
    return {32 * d, 64 * d};
}

CostBreakdown uplink_cost(const ModelSpec& spec, const CostConfig& cfg) {
    return coded_cost(spec, cfg.boundary_bits, cfg.uplink);
}

CostBreakdown downlink_cost(const ModelSpec& spec, const CostConfig& cfg) {
    if (!cfg.downlink.has_value()) {
        CostBreakdown out;
        out.index_bits =
            static_cast<std::int64_t>(cfg.float_bits) * static_cast<std::int64_t>(spec.total_dim());
        return out;
    }
    return coded_cost(spec, cfg.boundary_bits, *cfg.downlink);
}

RoundTotal round_total(const ModelSpec& spec, const CostConfig& cfg) {
    const Rational exact = uplink_cost(spec, cfg).total() + downlink_cost(spec, cfg).total();
    const Rational base(baseline_cost(spec).total_bits);
    RoundTotal out;
    out.exact_bits = exact;
    out.ceil_bits = exact.ceil();
    out.reduction_vs_baseline = ((base - exact) / base).to_double();
    return out;
}

QsgdCost qsgd_cost(const ModelSpec& spec, std::uint32_t levels) {
    const std::int64_t d = static_cast<std::int64_t>(spec.total_dim());
    QsgdCost out;
    out.uplink_bits = d * (index_bit_width(levels) + 1) +
                      32 * static_cast<std::int64_t>(spec.layer_count());
    out.total_bits = out.uplink_bits + 32 * d;
    const auto base = baseline_cost(spec).total_bits;
    out.reduction_vs_baseline =
        (Rational(base - out.total_bits) / Rational(base)).to_double();
    return out;
}

std::int64_t CostLedger::cumulative_actual_bits() const {
    std::int64_t total = 0;
    for (const auto& r : rounds_) {
        total += r.actual_total();
    }
    return total;
}

double CostLedger::reduction_vs_baseline(const ModelSpec& spec,
                                         std::uint32_t simulated_rounds) const {
    if (simulated_rounds == 0) {
        return 0.0;
    }
    const std::int64_t base =
        static_cast<std::int64_t>(simulated_rounds) * baseline_cost(spec).total_bits;
    return 1.0 - static_cast<double>(cumulative_actual_bits()) / static_cast<double>(base);
}

} // namespace fedquant
