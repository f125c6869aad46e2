#include <doctest.h>

#include <bit>
#include <random>

#include "colcrunch/codecs/codec.hpp"
#include "colcrunch/error.hpp"
#include "support/generators.hpp"

using namespace colcrunch;
using namespace colcrunch::codecs;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Reference varint encoder: repeated division, most significant group last.
Bytes reference_varint(std::uint64_t v) {
  Bytes out;
  do {
    const std::uint64_t digit = v % 128;
    v /= 128;
    out.push_back(static_cast<std::uint8_t>(digit + (v != 0 ? 128 : 0)));
  } while (v != 0);
  return out;
}

// Brute-force PFor block size: walks the block once per candidate width and
// counts bytes field by field.
std::size_t brute_force_pfor_block_size(const std::vector<std::uint32_t>& block) {
  std::size_t best = SIZE_MAX;
  for (unsigned w = 0; w <= 32; ++w) {
    std::size_t bytes = 1;                     // width
    bytes += (128 * w + 7) / 8;                // packed slots
    bytes += 1;                                // exception count
    for (std::uint32_t v : block) {
      const bool fits = w == 32 || v < (std::uint64_t{1} << w);
      if (!fits) bytes += 1 + 4;               // position + full value
    }
    best = std::min(best, bytes);
  }
  return best;
}

std::vector<std::uint32_t> roundtrip(CodecId c, const std::vector<std::uint32_t>& v) {
  const CompressedPayload p = compress_values(c, v);
  CHECK(p.codec == c);
  CHECK(p.value_count == v.size());
  return decompress_values(c, p.bytes, v.size());
}

}  // namespace

TEST_CASE("codec wire bytes and names") {
  for (std::uint8_t b = 0; b <= 5; ++b) CHECK(codec_to_byte(codec_from_byte(b)) == b);
  CHECK_THROWS_AS(codec_from_byte(6), FormatError);
  CHECK_THROWS_AS(codec_from_byte(255), FormatError);
  CHECK(codec_from_byte(3) == CodecId::FastPFor128);
  for (CodecId c : kAllCodecs) CHECK(parse_codec_name(codec_name(c)) == c);
  CHECK(parse_codec_name("binpack128") == CodecId::BinaryPacking128);
  CHECK_FALSE(parse_codec_name("nope").has_value());
}

TEST_CASE("raw format is little-endian u32") {
  const CompressedPayload p = compress_values(CodecId::Raw, std::vector<std::uint32_t>{1, 2, 3});
  CHECK(p.bytes == Bytes{1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0});
  CHECK(decompress_values(CodecId::Raw, p.bytes, 3) == std::vector<std::uint32_t>{1, 2, 3});
  CHECK_THROWS_AS(decompress_values(CodecId::Raw, p.bytes, 4), CodecError);
}

TEST_CASE("vbyte matches the reference varint encoder") {
  CHECK(reference_varint(300) == Bytes{0xAC, 0x02});
  CHECK(compress_values(CodecId::VByte, std::vector<std::uint32_t>{300}).bytes == Bytes{0xAC, 0x02});
  CHECK(decompress_values(CodecId::VByte, Bytes{0xAC, 0x02}, 1) == std::vector<std::uint32_t>{300});

  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const std::uint32_t v = testing::random_width_value(rng);
    CHECK(compress_values(CodecId::VByte, std::vector<std::uint32_t>{v}).bytes == reference_varint(v));
  }
  CHECK(compress_values(CodecId::VByte, std::vector<std::uint32_t>{0xFFFFFFFFu}).bytes.size() == 5);
}

TEST_CASE("vbyte rejects malformed input") {
  CHECK_THROWS_AS(decompress_values(CodecId::VByte, Bytes{0xAC}, 1), CodecError);
  CHECK_THROWS_AS(decompress_values(CodecId::VByte, Bytes{0xAC, 0x02, 0x01}, 1), CodecError);
  // Fifth byte carrying more than 4 payload bits.
  CHECK_THROWS_AS(decompress_values(CodecId::VByte, Bytes{0xFF, 0xFF, 0xFF, 0xFF, 0x1F}, 1),
                  CodecError);
  try {
    decompress_values(CodecId::VByte, Bytes{0x80, 0x80}, 1);
    FAIL("expected error");
  } catch (const CodecError& e) {
    CHECK(e.codec() == "VByte");
    CHECK(e.offset() == 2);
  }
}

TEST_CASE("binary packing layout") {
  SUBCASE("all zero block has width 0 and no payload") {
    const auto p = compress_values(CodecId::BinaryPacking128, std::vector<std::uint32_t>(128, 0));
    CHECK(p.bytes == Bytes{0});
  }
  SUBCASE("width-3 block of fives") {
    const auto p = compress_values(CodecId::BinaryPacking128, std::vector<std::uint32_t>(128, 5));
    REQUIRE(p.bytes.size() == 1 + 48);
    CHECK(p.bytes[0] == 3);
    for (DecodePath path : {DecodePath::Scalar, DecodePath::Vectorized}) {
      set_decode_path(path);
      CHECK(decompress_values(CodecId::BinaryPacking128, p.bytes, 128) ==
            std::vector<std::uint32_t>(128, 5));
    }
    set_decode_path(DecodePath::Vectorized);
  }
  SUBCASE("values are interleaved across four lanes") {
    // Width 1: value i lands in lane i % 4, bit i / 4 of that lane's word.
    std::vector<std::uint32_t> v(128, 0);
    v[0] = 1;   // lane 0 bit 0
    v[5] = 1;   // lane 1 bit 1
    v[127] = 1; // lane 3 bit 31
    const auto p = compress_values(CodecId::BinaryPacking128, v);
    REQUIRE(p.bytes.size() == 17);
    CHECK(p.bytes[0] == 1);
    const Bytes words(p.bytes.begin() + 1, p.bytes.end());
    CHECK(words == Bytes{0x01, 0, 0, 0, 0x02, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0x80});
  }
}

TEST_CASE("binary packing size is header plus 16*b bytes per block") {
  std::mt19937_64 rng(11);
  for (unsigned b = 0; b <= 32; ++b) {
    std::vector<std::uint32_t> v(128 * 3);
    for (auto& x : v) {
      x = b == 0 ? 0 : static_cast<std::uint32_t>(rng() & ((std::uint64_t{1} << b) - 1));
    }
    if (b > 0) v[0] = static_cast<std::uint32_t>((std::uint64_t{1} << b) - 1);
    // Every block must really need b bits for the exact formula.
    v[128] = v[0];
    v[256] = v[0];
    CHECK(compress_values(CodecId::BinaryPacking128, v).bytes.size() == 3 * (1 + 128 * b / 8));
  }
}

TEST_CASE("pfor stores one outlier as an exception") {
  std::vector<std::uint32_t> block;
  for (int i = 0; i < 127; ++i) block.push_back(8 + static_cast<std::uint32_t>(i % 8));
  block.insert(block.begin() + 40, 1000u);
  REQUIRE(block.size() == 128);

  const std::size_t expected = brute_force_pfor_block_size(block);
  // width byte + 64 packed bytes + count byte + (position + 4-byte value)
  CHECK(expected == 1 + 64 + 1 + 1 + 4);

  const auto p = compress_values(CodecId::PFor, block);
  CHECK(p.bytes.size() == expected);
  CHECK(p.bytes[0] == 4);
  CHECK(p.bytes[65] == 1);
  CHECK(p.bytes[66] == 40);
  CHECK(decompress_values(CodecId::PFor, p.bytes, 128) == block);
}

TEST_CASE("fastpfor exception layout") {
  std::vector<std::uint32_t> block(128, 3);
  block[7] = 0xFFFFFFFFu;
  const auto p = compress_values(CodecId::FastPFor128, block);
  // w=2: 1 + 32 packed + 1 count + 1 position + ceil(30/8) high bytes.
  CHECK(p.bytes.size() == 1 + 32 + 1 + 1 + 4);
  CHECK(p.bytes[0] == 2);
  CHECK(p.bytes[33] == 1);
  CHECK(p.bytes[34] == 7);
  for (DecodePath path : {DecodePath::Scalar, DecodePath::Vectorized}) {
    set_decode_path(path);
    CHECK(decompress_values(CodecId::FastPFor128, p.bytes, 128) == block);
  }
  set_decode_path(DecodePath::Vectorized);
}

TEST_CASE("size bounds") {
  CHECK(compressed_size_bound(CodecId::Raw, 10) == 40);
  CHECK(compressed_size_bound(CodecId::VByte, 10) == 50);
  CHECK(compressed_size_bound(CodecId::BinaryPacking128, 128) == 513);
  CHECK(compressed_size_bound(CodecId::BinaryPacking128, 129) == 2 * 513);
  CHECK(compressed_size_bound(CodecId::Brotli, 0) >= 1);
}

TEST_CASE("bound safety on random inputs") {
  std::mt19937_64 rng(99);
  for (CodecId c : kAllCodecs) {
    for (int i = 0; i < 100000; ++i) {
      const std::size_t n = rng() % 300;
      const auto d = testing::kAllDistributions[rng() % 5];
      const auto v = testing::generate(d, n, rng());
      const auto p = compress_values(c, v);
      REQUIRE(p.bytes.size() <= compressed_size_bound(c, v.size()));
    }
  }
}

TEST_CASE("roundtrip over distributions, sizes and tails") {
  for (CodecId c : kAllCodecs) {
    for (auto d : testing::kAllDistributions) {
      for (std::size_t n : {0, 1, 2, 127, 128, 129, 255, 256, 1000, 4097, 16384}) {
        const auto v = testing::generate(d, n, n * 31 + 5);
        CAPTURE(codec_name(c));
        CAPTURE(testing::distribution_name(d));
        CAPTURE(n);
        CHECK(roundtrip(c, v) == v);
      }
    }
  }
}

TEST_CASE("compression is deterministic") {
  const auto v = testing::generate(testing::Distribution::Zipf, 5000, 3);
  for (CodecId c : kAllCodecs) CHECK(compress_values(c, v).bytes == compress_values(c, v).bytes);
}

TEST_CASE("scalar and vectorized decoders agree") {
  std::mt19937_64 rng(5);
  for (CodecId c : {CodecId::FastPFor128, CodecId::BinaryPacking128}) {
    for (int i = 0; i < 200; ++i) {
      const auto v = testing::generate(testing::kAllDistributions[i % 4], 1 + rng() % 2000, rng());
      const auto p = compress_values(c, v);
      set_decode_path(DecodePath::Scalar);
      const auto a = decompress_values(c, p.bytes, v.size());
      set_decode_path(DecodePath::Vectorized);
      const auto b = decompress_values(c, p.bytes, v.size());
      CHECK(a == v);
      CHECK(b == v);
    }
  }
}

TEST_CASE("truncated and corrupted payloads are rejected") {
  const auto v = testing::generate(testing::Distribution::UniformWidths, 300, 17);
  for (CodecId c : kAllCodecs) {
    const auto p = compress_values(c, v);
    CAPTURE(codec_name(c));
    for (std::size_t cut : {std::size_t{0}, p.bytes.size() / 2, p.bytes.size() - 1}) {
      const Bytes truncated(p.bytes.begin(), p.bytes.begin() + static_cast<std::ptrdiff_t>(cut));
      CHECK_THROWS_AS(decompress_values(c, truncated, v.size()), CodecError);
    }
    Bytes extended = p.bytes;
    extended.push_back(0);
    CHECK_THROWS_AS(decompress_values(c, extended, v.size()), CodecError);
  }
  CHECK_THROWS_AS(decompress_values(CodecId::BinaryPacking128, Bytes{33}, 128), CodecError);
  // FastPFor128 with an exception position outside the block.
  Bytes bad = {0, 1, 200, 0, 0, 0, 0};
  CHECK_THROWS_AS(decompress_values(CodecId::FastPFor128, bad, 128), CodecError);
}
