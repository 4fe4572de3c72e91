#pragma once

#include <cstdint>

namespace rclab {

// Sum of absolute values of the 8x8 Hadamard transform of (a - b),
// normalized as raw sum / 4 rounded down.
int64_t satd_8x8(const uint8_t* a, int a_stride, const uint8_t* b, int b_stride);

// SATD of an 8x8 block against a flat predictor.
int64_t satd_8x8_const(const uint8_t* a, int a_stride, uint8_t value);

} // namespace rclab
