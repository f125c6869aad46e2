// Little-endian base-128 varint: seven payload bits per byte, high bit set on
// every byte except the last one of a value.

#include "codecs_internal.hpp"
#include "colcrunch/error.hpp"

namespace colcrunch::codecs::detail {

void vbyte_encode(std::span<const std::uint32_t> in, std::vector<std::uint8_t>& out) {
  out.reserve(out.size() + in.size() * 2);
  for (std::uint32_t v : in) {
    while (v >= 0x80u) {
      out.push_back(static_cast<std::uint8_t>((v & 0x7Fu) | 0x80u));
      v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
  }
}

void vbyte_decode(std::span<const std::uint8_t> in, std::span<std::uint32_t> out) {
  std::size_t pos = 0;
  const std::size_t n = in.size();
  for (std::uint32_t& dst : out) {
    std::uint32_t value = 0;
    unsigned shift = 0;
    for (;;) {
      if (pos >= n) throw CodecError("VByte", pos, "truncated input");
      const std::uint8_t b = in[pos];
      if (shift == 28 && (b & 0xF0u) != 0) {
        throw CodecError("VByte", pos, "value exceeds 32 bits");
      }
      ++pos;
      value |= static_cast<std::uint32_t>(b & 0x7Fu) << shift;
      if ((b & 0x80u) == 0) break;
      shift += 7;
    }
    dst = value;
  }
  if (pos != n) throw CodecError("VByte", pos, "trailing bytes after last value");
}

}  // namespace colcrunch::codecs::detail
