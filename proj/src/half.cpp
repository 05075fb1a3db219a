#include "fedquant/half.hpp"

#include <cstring>

namespace fedquant {

std::uint16_t float_to_half(float f) {
    std::uint32_t x;
    std::memcpy(&x, &f, sizeof(x));
    const std::uint32_t sign = (x >> 16) & 0x8000u;
    const std::uint32_t exp = (x >> 23) & 0xFFu;
    const std::uint32_t mant = x & 0x7FFFFFu;

    if (exp == 255u) { // inf / nan
        if (mant == 0) {
            return static_cast<std::uint16_t>(sign | 0x7C00u);
        }
        std::uint32_t payload = mant >> 13;
        if (payload == 0) {
            payload = 1; // keep nan a nan
        }
        return static_cast<std::uint16_t>(sign | 0x7C00u | payload);
    }

    const int e = static_cast<int>(exp) - 127 + 15;
    if (e >= 31) { // overflow
        return static_cast<std::uint16_t>(sign | 0x7C00u);
    }
    if (e <= 0) { // subnormal half (or zero)
        if (e < -10) {
            return static_cast<std::uint16_t>(sign);
        }
        const std::uint32_t full = mant | 0x800000u;
        const std::uint32_t shift = static_cast<std::uint32_t>(14 - e);
        std::uint32_t half = full >> shift;
        const std::uint32_t rem = full & ((1u << shift) - 1u);
        const std::uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half & 1u))) {
            ++half;
        }
        return static_cast<std::uint16_t>(sign | half);
    }

    std::uint32_t half = sign | (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
    const std::uint32_t rem = mant & 0x1FFFu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) {
        ++half; // carry may roll into the exponent; that is the correct rounding
    }
    return static_cast<std::uint16_t>(half);
}

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = (static_cast<std::uint32_t>(h) & 0x8000u) << 16;
    std::uint32_t exp = (h >> 10) & 0x1Fu;
    std::uint32_t mant = h & 0x3FFu;
    std::uint32_t out;

    if (exp == 0) {
        if (mant == 0) {
            out = sign; // signed zero
        } else {
            // Normalise the subnormal.
            int e = -1;
            do {
                mant <<= 1;
                ++e;
            } while ((mant & 0x400u) == 0);
            mant &= 0x3FFu;
            out = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | (mant << 13);
        }
    } else if (exp == 31u) {
        out = sign | 0x7F800000u | (mant << 13);
    } else {
        out = sign | ((exp - 15 + 127) << 23) | (mant << 13);
    }

    float f;
    std::memcpy(&f, &out, sizeof(f));
    return f;
}

} // namespace fedquant
