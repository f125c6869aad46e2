#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace colcrunch::codecs {

/// Wire byte values are stable: they are written into every column file header.
enum class CodecId : std::uint8_t {
  Raw = 0,
  VByte = 1,
  PFor = 2,
  FastPFor128 = 3,
  BinaryPacking128 = 4,
  Brotli = 5,
};

inline constexpr std::array<CodecId, 6> kAllCodecs = {
    CodecId::Raw,         CodecId::VByte,           CodecId::PFor,
    CodecId::FastPFor128, CodecId::BinaryPacking128, CodecId::Brotli};

// Sub-block geometry shared by PFor, FastPFor128 and BinaryPacking128.
inline constexpr std::size_t kBlockLen = 128;
inline constexpr std::size_t kLaneCount = 4;

/// Parses a wire byte. Throws FormatError on unknown values.
CodecId codec_from_byte(std::uint8_t b);
constexpr std::uint8_t codec_to_byte(CodecId c) { return static_cast<std::uint8_t>(c); }

/// Lowercase command-line name: raw, vbyte, pfor, fastpfor128, binpack128, brotli.
std::string_view codec_name(CodecId c);
std::optional<CodecId> parse_codec_name(std::string_view name);

/// Human-readable name used in reports (names the actual heavy-weight algorithm).
std::string_view codec_display_name(CodecId c);

constexpr bool is_lightweight(CodecId c) { return c != CodecId::Brotli && c != CodecId::Raw; }

struct CompressedPayload {
  CodecId codec = CodecId::Raw;
  std::uint32_t value_count = 0;
  std::vector<std::uint8_t> bytes;
};

CompressedPayload compress_values(CodecId codec, std::span<const std::uint32_t> values);

std::vector<std::uint32_t> decompress_values(CodecId codec, std::span<const std::uint8_t> bytes,
                                             std::size_t value_count);

/// Decodes exactly out.size() values into caller storage.
void decompress_into(CodecId codec, std::span<const std::uint8_t> bytes,
                     std::span<std::uint32_t> out);

std::size_t compressed_size_bound(CodecId codec, std::size_t value_count);

/// Selects the unpacking kernels used by FastPFor128 and BinaryPacking128.
/// Both paths read the same byte layout.
enum class DecodePath { Scalar, Vectorized };

void set_decode_path(DecodePath path);
DecodePath decode_path();

/// True when the vectorized path uses real SIMD instructions on this build.
bool simd_available();

}  // namespace colcrunch::codecs
