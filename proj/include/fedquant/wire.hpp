#pragma once

#include <cstdint>
#include <vector>

#include "fedquant/costing.hpp"
#include "fedquant/model.hpp"
#include "fedquant/quant.hpp"

namespace fedquant {

// Uplink payload framing. Every message is little-endian:
//
//   u8 kind (1 = bucket, 2 = norm-scaled, 3 = raw f32), u16 layer count,
//   then one block per layer:
//
//   bucket:  u16 levels, u32 count, u8 width, u8 flags,
//            [u64 digest]                      when flags bit1 (tests only)
//            [levels x u16 boundary halves]    when flags bit0 (refresh)
//            ceil(count*width/8) packed index bytes
//   norm:    u16 levels, u32 count, u8 width, u8 flags(0), f32 norm,
//            ceil(count/8) sign bytes, ceil(count*width/8) magnitude bytes
//   raw:     u16 0, u32 count, u8 32, u8 0, count x f32
//
// The levels field stores 0 when the true count exceeds 65535; parsers
// always validate against the decoder's own expected shapes, which is also
// what makes truncation and mismatches detectable. The codebook section
// carries the upper boundaries b_1..b_L as binary16, exactly the bits the
// cost model charges per refresh.
//
// Bit accounting (WireBits) covers content sections only: packed indices,
// codebook halves, signs+magnitudes, norms, raw floats. Headers and the
// test-only digest are framing and stay off the ledger.

struct WireBits {
    std::int64_t index_bits = 0;
    std::int64_t codebook_bits = 0;
    std::int64_t norm_bits = 0;

    std::int64_t total() const { return index_bits + codebook_bits + norm_bits; }
    bool operator==(const WireBits&) const = default;
};

std::vector<std::uint8_t> serialize_bucket_update(const std::vector<QuantisedLayerUpdate>& layers,
                                                  const std::vector<Codebook>& codebooks,
                                                  bool include_codebooks, bool include_digest);

struct ParsedBucketUpdate {
    std::vector<QuantisedLayerUpdate> layers;
    WireBits bits;
    bool refresh = false;
};

// Parses and validates against the decoder's codebooks and expected
// coordinate counts; any contradiction throws corrupt_payload_error.
ParsedBucketUpdate parse_bucket_update(const std::vector<std::uint8_t>& bytes,
                                       const std::vector<Codebook>& expected_codebooks,
                                       const std::vector<std::size_t>& expected_counts);

std::vector<std::uint8_t> serialize_qsgd_update(const std::vector<QsgdLayerUpdate>& layers,
                                                std::uint32_t levels);

struct ParsedQsgdUpdate {
    std::vector<QsgdLayerUpdate> layers;
    WireBits bits;
};

ParsedQsgdUpdate parse_qsgd_update(const std::vector<std::uint8_t>& bytes, std::uint32_t levels,
                                   const std::vector<std::size_t>& expected_counts);

std::vector<std::uint8_t> serialize_raw_update(const Update& update);

struct ParsedRawUpdate {
    Update update;
    WireBits bits;
};

ParsedRawUpdate parse_raw_update(const std::vector<std::uint8_t>& bytes,
                                 const std::vector<std::size_t>& expected_counts);

} // namespace fedquant
