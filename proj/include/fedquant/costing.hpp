#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fedquant/model.hpp"
#include "fedquant/rational.hpp"

namespace fedquant {

// ceil(log2(levels)); 0 for a single level.
std::uint32_t index_bit_width(std::uint32_t levels);

// ---------------------------------------------------------------------------
// Bit packing

// Fixed-width little-endian bit packing: index k occupies bits
// [k*width, (k+1)*width), least significant bit of each byte first.
// Width 0 is legal (single-level codebooks need no index bits).
struct PackedPayload {
    std::vector<std::uint8_t> bytes;
    std::uint64_t bit_length = 0;
    std::uint32_t width = 0;
};

PackedPayload pack_indices(const std::vector<std::uint32_t>& indices, std::uint32_t width);
std::vector<std::uint32_t> unpack_indices(const PackedPayload& payload, std::size_t count,
                                          std::uint32_t width);

// ---------------------------------------------------------------------------
// Per-round communication cost model
//
// Per client and round, a bucket-quantised uplink costs
//     sum_l d_l * ceil(log2 L_l)   index bits
//   + codebook bits amortised over the refresh period.
// A uniform configuration (one levels/refresh value broadcast to every
// layer) shares a single codebook charge b*L/T; per-layer configurations
// charge sum_l b*L_l/T_l. The reference cost tables use the uniform form.

struct CodebookCostSpec {
    std::vector<std::uint32_t> levels;
    std::vector<std::uint32_t> refresh;
    bool shared = false;

    static CodebookCostSpec uniform(std::uint32_t levels, std::uint32_t refresh);
    static CodebookCostSpec per_layer(std::vector<std::uint32_t> levels,
                                      std::vector<std::uint32_t> refresh);
};

struct CostConfig {
    std::uint32_t boundary_bits = 16; // b
    std::uint32_t float_bits = 32;
    CodebookCostSpec uplink;
    // Engaged = downlink coded the same way; empty = full-precision downlink.
    std::optional<CodebookCostSpec> downlink;
};

struct CostBreakdown {
    std::int64_t index_bits = 0;
    Rational codebook_bits;
    Rational total() const { return Rational(index_bits) + codebook_bits; }
};

struct BaselineCost {
    std::int64_t uplink_bits = 0;
    std::int64_t total_bits = 0; // uplink + full-precision downlink
};

BaselineCost baseline_cost(const ModelSpec& spec);
CostBreakdown uplink_cost(const ModelSpec& spec, const CostConfig& cfg);
CostBreakdown downlink_cost(const ModelSpec& spec, const CostConfig& cfg);

struct RoundTotal {
    Rational exact_bits;
    std::int64_t ceil_bits = 0;
    double reduction_vs_baseline = 0.0; // fraction of the 64d baseline saved
};

RoundTotal round_total(const ModelSpec& spec, const CostConfig& cfg);

// Norm-scaled comparator: d*(ceil(log2 s)+1) uplink bits plus one 32-bit
// norm per layer and a full-precision downlink. This is the reporting
// model; the simulator's wire charges ceil(log2(s+1)) magnitude bits since
// the magnitude can reach s.
struct QsgdCost {
    std::int64_t uplink_bits = 0; // includes the per-layer norms
    std::int64_t total_bits = 0;
    double reduction_vs_baseline = 0.0;
};

QsgdCost qsgd_cost(const ModelSpec& spec, std::uint32_t levels);

// ---------------------------------------------------------------------------
// Ledger filled by the simulator; every figure is per client per round.

struct RoundCost {
    std::int32_t round = 0; // -1 = calibration
    std::uint32_t clients = 0;
    bool refresh = false;
    std::int64_t uplink_index_bits = 0;            // packed payload bits
    std::int64_t uplink_codebook_bits_actual = 0;  // charged on refresh rounds
    Rational uplink_codebook_bits_amortised;       // sum_l b*L_l/T_l at current levels
    std::int64_t uplink_norm_bits = 0;             // per-layer norms (qsgd)
    std::int64_t uplink_calibration_bits = 0;      // full-precision seeding round
    std::int64_t downlink_bits = 0;

    std::int64_t actual_total() const {
        return uplink_index_bits + uplink_codebook_bits_actual + uplink_norm_bits +
               uplink_calibration_bits + downlink_bits;
    }
};

class CostLedger {
public:
    void append(RoundCost entry) { rounds_.push_back(entry); }
    const std::vector<RoundCost>& rounds() const { return rounds_; }

    // Cumulative per-client bits actually charged (calibration included).
    std::int64_t cumulative_actual_bits() const;
    // 1 - actual / (rounds * 64d); calibration counts against the quantised
    // side, the baseline has no calibration round.
    double reduction_vs_baseline(const ModelSpec& spec, std::uint32_t simulated_rounds) const;

private:
    std::vector<RoundCost> rounds_;
};

} // namespace fedquant
