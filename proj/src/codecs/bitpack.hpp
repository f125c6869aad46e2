#pragma once

// Bit-packing kernels for 128-value sub-blocks.
//
// Two layouts are supported:
//   sequential  - value i occupies bits [i*w, (i+1)*w) of a little-endian
//                 stream of 4*w 32-bit words.
//   interleaved - value i belongs to lane i % 4 at lane slot i / 4; each lane
//                 is a sequential stream of w words and word m of lane j is
//                 stored at word index 4*m + j. Sixteen bytes therefore hold
//                 one word of every lane, which is what a 128-bit register
//                 loads in a single instruction.
// Both layouts occupy exactly 16*w bytes per sub-block.

#include <cstddef>
#include <cstdint>

namespace colcrunch::codecs::detail {

inline constexpr std::size_t packed_bytes(unsigned width) { return 16u * width; }

void pack_sequential(const std::uint32_t* in, unsigned width, std::uint8_t* out);
void unpack_sequential(const std::uint8_t* in, unsigned width, std::uint32_t* out);

void pack_interleaved(const std::uint32_t* in, unsigned width, std::uint8_t* out);
void unpack_interleaved_scalar(const std::uint8_t* in, unsigned width, std::uint32_t* out);
void unpack_interleaved_vectorized(const std::uint8_t* in, unsigned width, std::uint32_t* out);

bool vectorized_uses_simd();

}  // namespace colcrunch::codecs::detail
