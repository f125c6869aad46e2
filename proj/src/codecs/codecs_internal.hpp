#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "colcrunch/codecs/codec.hpp"

namespace colcrunch::codecs::detail {

void vbyte_encode(std::span<const std::uint32_t> in, std::vector<std::uint8_t>& out);
void vbyte_decode(std::span<const std::uint8_t> in, std::span<std::uint32_t> out);

// Block family: PFor, FastPFor128 and BinaryPacking128.
void block_encode(CodecId codec, std::span<const std::uint32_t> in, std::vector<std::uint8_t>& out);
void block_decode(CodecId codec, std::span<const std::uint8_t> in, std::span<std::uint32_t> out,
                  DecodePath path);
std::size_t block_size_bound(CodecId codec, std::size_t value_count);

void brotli_encode(std::span<const std::uint32_t> in, std::vector<std::uint8_t>& out);
void brotli_decode(std::span<const std::uint8_t> in, std::span<std::uint32_t> out);
std::size_t brotli_size_bound(std::size_t value_count);

}  // namespace colcrunch::codecs::detail
