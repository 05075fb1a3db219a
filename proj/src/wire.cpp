#include "fedquant/wire.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "fedquant/errors.hpp"
#include "fedquant/half.hpp"

namespace fedquant {

namespace {

constexpr std::uint8_t kKindBucket = 1;
constexpr std::uint8_t kKindQsgd = 2;
constexpr std::uint8_t kKindRaw = 3;

constexpr std::uint8_t kFlagCodebook = 0x01;
constexpr std::uint8_t kFlagDigest = 0x02;

std::uint16_t levels_field(std::size_t levels) {
    return levels > 0xFFFF ? 0 : static_cast<std::uint16_t>(levels);
}

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v) {
        bytes_.push_back(static_cast<std::uint8_t>(v));
        bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(const std::vector<std::uint8_t>& chunk) {
        bytes_.insert(bytes_.end(), chunk.begin(), chunk.end());
    }

    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::vector<std::uint8_t> raw(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> chunk(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                        bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return chunk;
    }

    void expect_end() const {
        if (pos_ != bytes_.size())
            throw corrupt_payload_error(context_ + ": " + std::to_string(bytes_.size() - pos_) +
                                        " trailing bytes after last layer");
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw corrupt_payload_error(context_ + ": " + message);
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            throw corrupt_payload_error(context_ + ": payload truncated at byte " +
                                        std::to_string(pos_));
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

void read_message_header(ByteReader& r, std::uint8_t expected_kind, std::size_t expected_layers) {
    std::uint8_t kind = r.u8();
    if (kind != expected_kind)
        r.fail("message kind " + std::to_string(kind) + " does not match expected " +
               std::to_string(expected_kind));
    std::uint16_t layer_count = r.u16();
    if (layer_count != expected_layers)
        r.fail("layer count " + std::to_string(layer_count) + " does not match expected " +
               std::to_string(expected_layers));
}

void check_layer_header(ByteReader& r, std::size_t layer, std::uint16_t got_levels,
                        std::size_t expected_levels, std::uint32_t got_count,
                        std::size_t expected_count, std::uint8_t got_width,
                        std::uint32_t expected_width) {
    std::string at = "layer " + std::to_string(layer) + " ";
    if (got_levels != levels_field(expected_levels))
        r.fail(at + "levels field " + std::to_string(got_levels) + " does not match expected " +
               std::to_string(levels_field(expected_levels)));
    if (got_count != expected_count)
        r.fail(at + "coordinate count " + std::to_string(got_count) +
               " does not match expected " + std::to_string(expected_count));
    if (got_width != expected_width)
        r.fail(at + "index width " + std::to_string(got_width) + " does not match expected " +
               std::to_string(expected_width));
}

std::size_t packed_byte_count(std::size_t count, std::uint32_t width) {
    return (count * width + 7) / 8;
}

// Magnitudes span [0, levels] inclusive, so they need one value more than an
// index into `levels` buckets.
std::uint32_t qsgd_magnitude_width(std::uint32_t levels) {
    return static_cast<std::uint32_t>(std::bit_width(levels));
}

} // namespace

std::vector<std::uint8_t> serialize_bucket_update(const std::vector<QuantisedLayerUpdate>& layers,
                                                  const std::vector<Codebook>& codebooks,
                                                  bool include_codebooks, bool include_digest) {
    if (layers.size() != codebooks.size())
        throw input_error("serialize_bucket_update: " + std::to_string(layers.size()) +
                          " layers but " + std::to_string(codebooks.size()) + " codebooks");
    if (layers.size() > 0xFFFF)
        throw input_error("serialize_bucket_update: more than 65535 layers");

    ByteWriter w;
    w.u8(kKindBucket);
    w.u16(static_cast<std::uint16_t>(layers.size()));
    std::uint8_t flags = 0;
    if (include_codebooks) flags |= kFlagCodebook;
    if (include_digest) flags |= kFlagDigest;

    for (std::size_t l = 0; l < layers.size(); ++l) {
        const QuantisedLayerUpdate& layer = layers[l];
        const Codebook& book = codebooks[l];
        if (layer.levels != book.levels())
            throw input_error("serialize_bucket_update: layer " + std::to_string(l) + " has " +
                              std::to_string(layer.levels) + " levels but its codebook has " +
                              std::to_string(book.levels()));
        std::uint32_t width = index_bit_width(layer.levels);
        PackedPayload packed = pack_indices(layer.indices, width);

        w.u16(levels_field(layer.levels));
        w.u32(static_cast<std::uint32_t>(layer.indices.size()));
        w.u8(static_cast<std::uint8_t>(width));
        w.u8(flags);
        if (include_digest) w.u64(book.digest());
        if (include_codebooks)
            for (std::size_t j = 1; j <= book.levels(); ++j)
                w.u16(float_to_half(book.boundary(j)));
        w.raw(packed.bytes);
    }
    return w.take();
}

ParsedBucketUpdate parse_bucket_update(const std::vector<std::uint8_t>& bytes,
                                       const std::vector<Codebook>& expected_codebooks,
                                       const std::vector<std::size_t>& expected_counts) {
    if (expected_codebooks.size() != expected_counts.size())
        throw input_error("parse_bucket_update: " + std::to_string(expected_codebooks.size()) +
                          " codebooks but " + std::to_string(expected_counts.size()) +
                          " expected counts");

    ByteReader r(bytes, "parse_bucket_update");
    read_message_header(r, kKindBucket, expected_codebooks.size());

    ParsedBucketUpdate out;
    for (std::size_t l = 0; l < expected_codebooks.size(); ++l) {
        const Codebook& book = expected_codebooks[l];
        std::uint16_t got_levels = r.u16();
        std::uint32_t got_count = r.u32();
        std::uint8_t got_width = r.u8();
        std::uint8_t flags = r.u8();
        std::uint32_t width = index_bit_width(static_cast<std::uint32_t>(book.levels()));
        check_layer_header(r, l, got_levels, book.levels(), got_count, expected_counts[l],
                           got_width, width);
        if (flags & ~(kFlagCodebook | kFlagDigest))
            r.fail("layer " + std::to_string(l) + " has unknown flag bits");
        bool has_codebook = (flags & kFlagCodebook) != 0;
        if (l == 0)
            out.refresh = has_codebook;
        else if (has_codebook != out.refresh)
            r.fail("layer " + std::to_string(l) + " codebook flag disagrees with layer 0");

        if (flags & kFlagDigest) {
            std::uint64_t digest = r.u64();
            if (digest != book.digest())
                r.fail("layer " + std::to_string(l) + " codebook digest mismatch");
        }
        if (has_codebook) {
            for (std::size_t j = 1; j <= book.levels(); ++j) {
                std::uint16_t half = r.u16();
                if (half != float_to_half(book.boundary(j)))
                    r.fail("layer " + std::to_string(l) + " boundary " + std::to_string(j) +
                           " does not match the agreed codebook");
            }
            out.bits.codebook_bits += 16 * static_cast<std::int64_t>(book.levels());
        }

        PackedPayload packed;
        packed.bytes = r.raw(packed_byte_count(got_count, width));
        packed.bit_length = static_cast<std::uint64_t>(got_count) * width;
        packed.width = width;
        std::vector<std::uint32_t> indices = unpack_indices(packed, got_count, width);
        for (std::uint32_t index : indices)
            if (index >= book.levels())
                r.fail("layer " + std::to_string(l) + " index " + std::to_string(index) +
                       " out of range for " + std::to_string(book.levels()) + " levels");

        out.layers.push_back({std::move(indices), static_cast<std::uint32_t>(book.levels())});
        out.bits.index_bits += static_cast<std::int64_t>(got_count) * width;
    }
    r.expect_end();
    return out;
}

std::vector<std::uint8_t> serialize_qsgd_update(const std::vector<QsgdLayerUpdate>& layers,
                                                std::uint32_t levels) {
    if (levels == 0) throw input_error("serialize_qsgd_update: levels must be at least 1");
    if (layers.size() > 0xFFFF)
        throw input_error("serialize_qsgd_update: more than 65535 layers");
    std::uint32_t width = qsgd_magnitude_width(levels);

    ByteWriter w;
    w.u8(kKindQsgd);
    w.u16(static_cast<std::uint16_t>(layers.size()));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const QsgdLayerUpdate& layer = layers[l];
        if (layer.signs.size() != layer.magnitudes.size())
            throw input_error("serialize_qsgd_update: layer " + std::to_string(l) + " has " +
                              std::to_string(layer.signs.size()) + " signs but " +
                              std::to_string(layer.magnitudes.size()) + " magnitudes");
        if (!std::isfinite(layer.norm) || layer.norm < 0.0f)
            throw input_error("serialize_qsgd_update: layer " + std::to_string(l) +
                              " norm is not a finite non-negative value");
        std::vector<std::uint32_t> sign_bits(layer.signs.size());
        for (std::size_t i = 0; i < layer.signs.size(); ++i) {
            if (layer.signs[i] > 1)
                throw input_error("serialize_qsgd_update: layer " + std::to_string(l) +
                                  " sign values must be 0 or 1");
            sign_bits[i] = layer.signs[i];
        }
        for (std::uint32_t m : layer.magnitudes)
            if (m > levels)
                throw input_error("serialize_qsgd_update: layer " + std::to_string(l) +
                                  " magnitude " + std::to_string(m) + " exceeds " +
                                  std::to_string(levels));

        w.u16(levels_field(levels));
        w.u32(static_cast<std::uint32_t>(layer.magnitudes.size()));
        w.u8(static_cast<std::uint8_t>(width));
        w.u8(0);
        w.f32(layer.norm);
        w.raw(pack_indices(sign_bits, 1).bytes);
        w.raw(pack_indices(layer.magnitudes, width).bytes);
    }
    return w.take();
}

ParsedQsgdUpdate parse_qsgd_update(const std::vector<std::uint8_t>& bytes, std::uint32_t levels,
                                   const std::vector<std::size_t>& expected_counts) {
    if (levels == 0) throw input_error("parse_qsgd_update: levels must be at least 1");

    ByteReader r(bytes, "parse_qsgd_update");
    read_message_header(r, kKindQsgd, expected_counts.size());
    std::uint32_t width = qsgd_magnitude_width(levels);

    ParsedQsgdUpdate out;
    for (std::size_t l = 0; l < expected_counts.size(); ++l) {
        std::uint16_t got_levels = r.u16();
        std::uint32_t got_count = r.u32();
        std::uint8_t got_width = r.u8();
        std::uint8_t flags = r.u8();
        check_layer_header(r, l, got_levels, levels, got_count, expected_counts[l], got_width,
                           width);
        if (flags != 0) r.fail("layer " + std::to_string(l) + " has unknown flag bits");

        QsgdLayerUpdate layer;
        layer.norm = r.f32();
        if (!std::isfinite(layer.norm) || layer.norm < 0.0f)
            r.fail("layer " + std::to_string(l) + " norm is not a finite non-negative value");

        PackedPayload sign_payload;
        sign_payload.bytes = r.raw(packed_byte_count(got_count, 1));
        sign_payload.bit_length = got_count;
        sign_payload.width = 1;
        std::vector<std::uint32_t> sign_bits = unpack_indices(sign_payload, got_count, 1);
        layer.signs.resize(sign_bits.size());
        for (std::size_t i = 0; i < sign_bits.size(); ++i)
            layer.signs[i] = static_cast<std::uint8_t>(sign_bits[i]);

        PackedPayload mag_payload;
        mag_payload.bytes = r.raw(packed_byte_count(got_count, width));
        mag_payload.bit_length = static_cast<std::uint64_t>(got_count) * width;
        mag_payload.width = width;
        layer.magnitudes = unpack_indices(mag_payload, got_count, width);
        for (std::uint32_t m : layer.magnitudes)
            if (m > levels)
                r.fail("layer " + std::to_string(l) + " magnitude " + std::to_string(m) +
                       " exceeds " + std::to_string(levels));

        out.bits.norm_bits += 32;
        out.bits.index_bits += static_cast<std::int64_t>(got_count) * (width + 1);
        out.layers.push_back(std::move(layer));
    }
    r.expect_end();
    return out;
}

std::vector<std::uint8_t> serialize_raw_update(const Update& update) {
    if (update.per_layer.size() > 0xFFFF)
        throw input_error("serialize_raw_update: more than 65535 layers");

    ByteWriter w;
    w.u8(kKindRaw);
    w.u16(static_cast<std::uint16_t>(update.per_layer.size()));
    for (const std::vector<float>& layer : update.per_layer) {
        w.u16(0);
        w.u32(static_cast<std::uint32_t>(layer.size()));
        w.u8(32);
        w.u8(0);
        for (float v : layer) w.f32(v);
    }
    return w.take();
}

ParsedRawUpdate parse_raw_update(const std::vector<std::uint8_t>& bytes,
                                 const std::vector<std::size_t>& expected_counts) {
    ByteReader r(bytes, "parse_raw_update");
    read_message_header(r, kKindRaw, expected_counts.size());

    ParsedRawUpdate out;
    for (std::size_t l = 0; l < expected_counts.size(); ++l) {
        std::uint16_t got_levels = r.u16();
        std::uint32_t got_count = r.u32();
        std::uint8_t got_width = r.u8();
        std::uint8_t flags = r.u8();
        if (got_levels != 0)
            r.fail("layer " + std::to_string(l) + " levels field must be 0 for raw payloads");
        if (got_count != expected_counts[l])
            r.fail("layer " + std::to_string(l) + " coordinate count " +
                   std::to_string(got_count) + " does not match expected " +
                   std::to_string(expected_counts[l]));
        if (got_width != 32)
            r.fail("layer " + std::to_string(l) + " width must be 32 for raw payloads");
        if (flags != 0) r.fail("layer " + std::to_string(l) + " has unknown flag bits");

        std::vector<float> values(got_count);
        for (std::uint32_t i = 0; i < got_count; ++i) values[i] = r.f32();
        out.bits.index_bits += 32 * static_cast<std::int64_t>(got_count);
        out.update.per_layer.push_back(std::move(values));
    }
    r.expect_end();
    return out;
}

} // namespace fedquant
