// 128-value sub-block codecs.
//
// Every page is cut into ceil(n / 128) sub-blocks; the last one is padded
// with zeros and the caller's value count trims the padding on decode.
//
//   BinaryPacking128:  [w:1] [interleaved w-bit values: 16w]
//   FastPFor128:       [w:1] [interleaved low w bits: 16w] [c:1] [pos:1]*c
//                      [high (32-w) bits of the c exceptions, bit stream,
//                       ceil(c*(32-w)/8) bytes]
//   PFor:              [w:1] [sequential low w bits: 16w] [c:1] [pos:1]*c
//                      [full value:4]*c
//
// For the two exception codecs w is the size-minimizing width over 0..32;
// ties go to the smaller width.

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <string>

#include "bitpack.hpp"
#include "codecs_internal.hpp"
#include "colcrunch/error.hpp"

namespace colcrunch::codecs::detail {

namespace {

using Block = std::array<std::uint32_t, kBlockLen>;

unsigned bits_needed(std::uint32_t v) { return static_cast<unsigned>(std::bit_width(v)); }

std::size_t div_ceil(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t exception_codec_block_size(CodecId codec, unsigned w, std::size_t c) {
  if (codec == CodecId::PFor) return 2 + packed_bytes(w) + 5 * c;
  return 2 + packed_bytes(w) + c + div_ceil(c * (32 - w), 8);
}

struct WidthChoice {
  unsigned width;
  std::size_t exceptions;
};

WidthChoice choose_width(CodecId codec, const Block& block) {
  std::array<std::size_t, 33> hist{};
  for (std::uint32_t v : block) ++hist[bits_needed(v)];
  // above[w] = number of values needing more than w bits.
  std::array<std::size_t, 33> above{};
  std::size_t acc = 0;
  for (int w = 32; w >= 0; --w) {
    above[static_cast<std::size_t>(w)] = acc;
    acc += hist[static_cast<std::size_t>(w)];
  }
  WidthChoice best{32, 0};
  std::size_t best_size = exception_codec_block_size(codec, 32, 0);
  for (unsigned w = 0; w < 32; ++w) {
    const std::size_t size = exception_codec_block_size(codec, w, above[w]);
    if (size < best_size) {
      best_size = size;
      best = {w, above[w]};
    }
  }
  return best;
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void put(std::uint32_t value, unsigned bits) {
    acc_ |= static_cast<std::uint64_t>(value) << filled_;
    filled_ += bits;
    while (filled_ >= 8) {
      out_.push_back(static_cast<std::uint8_t>(acc_));
      acc_ >>= 8;
      filled_ -= 8;
    }
  }
  void flush() {
    if (filled_ > 0) out_.push_back(static_cast<std::uint8_t>(acc_));
    acc_ = 0;
    filled_ = 0;
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint64_t acc_ = 0;
  unsigned filled_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const std::uint8_t* p) : p_(p) {}
  std::uint32_t get(unsigned bits) {
    while (filled_ < bits) {
      acc_ |= static_cast<std::uint64_t>(*p_++) << filled_;
      filled_ += 8;
    }
    const std::uint64_t mask = bits == 32 ? 0xFFFFFFFFull : ((1ull << bits) - 1);
    const auto v = static_cast<std::uint32_t>(acc_ & mask);
    acc_ >>= bits;
    filled_ -= bits;
    return v;
  }

 private:
  const std::uint8_t* p_;
  std::uint64_t acc_ = 0;
  unsigned filled_ = 0;
};

void append_packed(std::vector<std::uint8_t>& out, const Block& block, unsigned w,
                   bool interleaved) {
  const std::size_t at = out.size();
  out.resize(at + packed_bytes(w));
  if (interleaved) {
    pack_interleaved(block.data(), w, out.data() + at);
  } else {
    pack_sequential(block.data(), w, out.data() + at);
  }
}

void encode_block(CodecId codec, const Block& block, std::vector<std::uint8_t>& out) {
  if (codec == CodecId::BinaryPacking128) {
    std::uint32_t all = 0;
    for (std::uint32_t v : block) all |= v;
    const auto w = static_cast<unsigned>(std::bit_width(all));
    out.push_back(static_cast<std::uint8_t>(w));
    append_packed(out, block, w, true);
    return;
  }

  const WidthChoice choice = choose_width(codec, block);
  const unsigned w = choice.width;
  out.push_back(static_cast<std::uint8_t>(w));
  append_packed(out, block, w, codec == CodecId::FastPFor128);
  out.push_back(static_cast<std::uint8_t>(choice.exceptions));
  if (choice.exceptions == 0) return;

  for (std::size_t i = 0; i < kBlockLen; ++i) {
    if (bits_needed(block[i]) > w) out.push_back(static_cast<std::uint8_t>(i));
  }
  if (codec == CodecId::PFor) {
    for (std::uint32_t v : block) {
      if (bits_needed(v) > w) {
        std::uint8_t le[4];
        std::memcpy(le, &v, 4);
        out.insert(out.end(), le, le + 4);
      }
    }
  } else {
    BitWriter bits(out);
    for (std::uint32_t v : block) {
      if (bits_needed(v) > w) bits.put(v >> w, 32 - w);
    }
    bits.flush();
  }
}

std::string_view label(CodecId codec) { return codec_display_name(codec); }

void need(CodecId codec, std::size_t pos, std::size_t n, std::size_t total, const char* what) {
  if (total - pos < n) {
    throw CodecError(std::string(label(codec)), pos,
                     std::string("truncated ") + what + " (need " + std::to_string(n) +
                         " bytes, " + std::to_string(total - pos) + " left)");
  }
}

}  // namespace

void block_encode(CodecId codec, std::span<const std::uint32_t> in,
                  std::vector<std::uint8_t>& out) {
  Block block;
  for (std::size_t start = 0; start < in.size(); start += kBlockLen) {
    const std::size_t len = std::min(kBlockLen, in.size() - start);
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(start), len, block.begin());
    std::fill(block.begin() + static_cast<std::ptrdiff_t>(len), block.end(), 0u);
    encode_block(codec, block, out);
  }
}

void block_decode(CodecId codec, std::span<const std::uint8_t> in, std::span<std::uint32_t> out,
                  DecodePath path) {
  const std::size_t total = in.size();
  const std::uint8_t* base = in.data();
  std::size_t pos = 0;
  Block scratch;
  const bool interleaved = codec != CodecId::PFor;

  for (std::size_t start = 0; start < out.size(); start += kBlockLen) {
    const std::size_t len = std::min(kBlockLen, out.size() - start);
    std::uint32_t* dst = len == kBlockLen ? out.data() + start : scratch.data();

    need(codec, pos, 1, total, "block header");
    const unsigned w = base[pos];
    if (w > 32) throw CodecError(std::string(label(codec)), pos, "bit width > 32");
    ++pos;
    need(codec, pos, packed_bytes(w), total, "packed values");
    if (!interleaved) {
      unpack_sequential(base + pos, w, dst);
    } else if (path == DecodePath::Vectorized) {
      unpack_interleaved_vectorized(base + pos, w, dst);
    } else {
      unpack_interleaved_scalar(base + pos, w, dst);
    }
    pos += packed_bytes(w);

    if (codec != CodecId::BinaryPacking128) {
      need(codec, pos, 1, total, "exception count");
      const std::size_t c = base[pos];
      if (c > kBlockLen) throw CodecError(std::string(label(codec)), pos, "exception count > 128");
      if (c > 0 && w == 32) {
        throw CodecError(std::string(label(codec)), pos, "exceptions at width 32");
      }
      ++pos;
      need(codec, pos, c, total, "exception positions");
      const std::uint8_t* positions = base + pos;
      for (std::size_t e = 0; e < c; ++e) {
        if (positions[e] >= kBlockLen) {
          throw CodecError(std::string(label(codec)), pos + e, "exception position >= 128");
        }
      }
      pos += c;
      if (codec == CodecId::PFor) {
        need(codec, pos, 4 * c, total, "exception values");
        for (std::size_t e = 0; e < c; ++e) {
          std::uint32_t v;
          std::memcpy(&v, base + pos + 4 * e, 4);
          dst[positions[e]] = v;
        }
        pos += 4 * c;
      } else {
        const std::size_t high_bytes = div_ceil(c * (32 - w), 8);
        need(codec, pos, high_bytes, total, "exception high bits");
        BitReader bits(base + pos);
        for (std::size_t e = 0; e < c; ++e) {
          dst[positions[e]] |= bits.get(32 - w) << w;
        }
        pos += high_bytes;
      }
    }
    if (dst == scratch.data()) std::copy_n(scratch.begin(), len, out.begin() + start);
  }
  if (pos != total) {
    throw CodecError(std::string(label(codec)), pos, "trailing bytes after last block");
  }
}

std::size_t block_size_bound(CodecId codec, std::size_t value_count) {
  const std::size_t blocks = div_ceil(value_count, kBlockLen);
  if (codec == CodecId::BinaryPacking128) return blocks * (1 + packed_bytes(32));
  // The width scan never does worse than width 32 with no exceptions.
  return blocks * (2 + packed_bytes(32));
}

}  // namespace colcrunch::codecs::detail
