#include "colcrunch/codecs/codec.hpp"

#include <atomic>
#include <bit>
#include <cstring>
#include <string>

#include "bitpack.hpp"
#include "codecs_internal.hpp"
#include "colcrunch/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "column files and codec payloads assume a little-endian host");

namespace colcrunch::codecs {

namespace {

std::atomic<DecodePath> g_decode_path{DecodePath::Vectorized};

void raw_decode(std::span<const std::uint8_t> in, std::span<std::uint32_t> out) {
  if (in.size() != out.size() * 4) {
    throw CodecError("Raw", std::min(in.size(), out.size() * 4),
                     "expected " + std::to_string(out.size() * 4) + " bytes, got " +
                         std::to_string(in.size()));
  }
  if (!out.empty()) std::memcpy(out.data(), in.data(), in.size());
}

}  // namespace

CodecId codec_from_byte(std::uint8_t b) {
  if (b > static_cast<std::uint8_t>(CodecId::Brotli)) {
    throw FormatError("unknown codec byte " + std::to_string(b));
  }
  return static_cast<CodecId>(b);
}

std::string_view codec_name(CodecId c) {
  switch (c) {
    case CodecId::Raw: return "raw";
    case CodecId::VByte: return "vbyte";
    case CodecId::PFor: return "pfor";
    case CodecId::FastPFor128: return "fastpfor128";
    case CodecId::BinaryPacking128: return "binpack128";
    case CodecId::Brotli: return "brotli";
  }
  return "?";
}

std::optional<CodecId> parse_codec_name(std::string_view name) {
  for (CodecId c : kAllCodecs) {
    if (codec_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view codec_display_name(CodecId c) {
  switch (c) {
    case CodecId::Raw: return "Raw";
    case CodecId::VByte: return "VByte";
    case CodecId::PFor: return "PFor";
    case CodecId::FastPFor128: return "FastPFor128";
    case CodecId::BinaryPacking128: return "BinaryPacking128";
    case CodecId::Brotli: return "Brotli";
  }
  return "?";
}

CompressedPayload compress_values(CodecId codec, std::span<const std::uint32_t> values) {
  CompressedPayload payload;
  payload.codec = codec;
  payload.value_count = static_cast<std::uint32_t>(values.size());
  switch (codec) {
    case CodecId::Raw:
      payload.bytes.resize(values.size() * 4);
      if (!values.empty()) std::memcpy(payload.bytes.data(), values.data(), payload.bytes.size());
      break;
    case CodecId::VByte:
      detail::vbyte_encode(values, payload.bytes);
      break;
    case CodecId::PFor:
    case CodecId::FastPFor128:
    case CodecId::BinaryPacking128:
      detail::block_encode(codec, values, payload.bytes);
      break;
    case CodecId::Brotli:
      detail::brotli_encode(values, payload.bytes);
      break;
  }
  return payload;
}

void decompress_into(CodecId codec, std::span<const std::uint8_t> bytes,
                     std::span<std::uint32_t> out) {
  switch (codec) {
    case CodecId::Raw:
      raw_decode(bytes, out);
      return;
    case CodecId::VByte:
      detail::vbyte_decode(bytes, out);
      return;
    case CodecId::PFor:
    case CodecId::FastPFor128:
    case CodecId::BinaryPacking128:
      detail::block_decode(codec, bytes, out, decode_path());
      return;
    case CodecId::Brotli:
      detail::brotli_decode(bytes, out);
      return;
  }
  throw FormatError("unknown codec");
}

std::vector<std::uint32_t> decompress_values(CodecId codec, std::span<const std::uint8_t> bytes,
                                             std::size_t value_count) {
  std::vector<std::uint32_t> out(value_count);
  decompress_into(codec, bytes, out);
  return out;
}

std::size_t compressed_size_bound(CodecId codec, std::size_t value_count) {
  switch (codec) {
    case CodecId::Raw: return 4 * value_count;
    case CodecId::VByte: return 5 * value_count;
    case CodecId::PFor:
    case CodecId::FastPFor128:
    case CodecId::BinaryPacking128: return detail::block_size_bound(codec, value_count);
    case CodecId::Brotli: return detail::brotli_size_bound(value_count);
  }
  return 0;
}

void set_decode_path(DecodePath path) { g_decode_path.store(path, std::memory_order_relaxed); }

DecodePath decode_path() { return g_decode_path.load(std::memory_order_relaxed); }

bool simd_available() { return detail::vectorized_uses_simd(); }

}  // namespace colcrunch::codecs
