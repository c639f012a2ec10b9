#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nadpcm/codec.hpp"

namespace nadpcm {

// Byte layout (little-endian integers, IEEE-754 binary64 reals):
//
//   "NADP" | version u8 = 1 | sample_rate u32 | sample_count u64 | frame_len u16
//   | bits u8 | predictor u8 | adaptation u8 | epochs u8 | restarts u8 | seed u64
//   | step0 f64 | step_min f64 | step_max f64 | multiplier_count u8 | f64 * count
//   | init_scale f64 | lambda_init f64 | lambda_up f64 | lambda_down f64
//
// followed by one MSB-first bit sequence holding every frame in order:
//
//   [hybrid flag, 1 bit] [forward coefficients, byte-aligned f64s] [codes]
//
// Each code is stored in Nq bits as code + 2^(Nq-1). The last byte is zero
// padded.

inline constexpr std::uint8_t kFormatVersion = 1;

std::vector<std::uint8_t> serialize(const Bitstream& stream);

/// Throws MalformedBitstream; errors inside the payload carry the frame index.
Bitstream parse(std::span<const std::uint8_t> bytes);

/// Bits occupied by the frame payloads, before final byte padding.
std::size_t payload_bits(const Bitstream& stream);

}  // namespace nadpcm
