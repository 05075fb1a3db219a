#pragma once

#include <cstdint>

namespace fedquant {

// IEEE 754 binary16 conversions (round to nearest, ties to even).
std::uint16_t float_to_half(float f);
float half_to_float(std::uint16_t h);

} // namespace fedquant
