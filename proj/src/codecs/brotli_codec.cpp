// Heavy-weight codec: Brotli at its default quality and window over the
// little-endian byte image of the page.

#include <brotli/decode.h>
#include <brotli/encode.h>

#include <cstring>
#include <memory>
#include <string>

#include "codecs_internal.hpp"
#include "colcrunch/error.hpp"

namespace colcrunch::codecs::detail {

namespace {

struct DecoderDeleter {
  void operator()(BrotliDecoderState* s) const { BrotliDecoderDestroyInstance(s); }
};

}  // namespace

std::size_t brotli_size_bound(std::size_t value_count) {
  const std::size_t bound = BrotliEncoderMaxCompressedSize(value_count * 4);
  // The library reports 0 when the bound does not fit size_t; empty input
  // still needs a stream terminator.
  return bound == 0 ? value_count * 4 + 16 : bound;
}

void brotli_encode(std::span<const std::uint32_t> in, std::vector<std::uint8_t>& out) {
  const std::size_t input_size = in.size() * 4;
  std::vector<std::uint8_t> buffer(brotli_size_bound(in.size()));
  std::size_t encoded_size = buffer.size();
  const auto* input = reinterpret_cast<const std::uint8_t*>(in.data());
  const BROTLI_BOOL ok =
      BrotliEncoderCompress(BROTLI_DEFAULT_QUALITY, BROTLI_DEFAULT_WINDOW, BROTLI_MODE_GENERIC,
                            input_size, input_size == 0 ? nullptr : input, &encoded_size,
                            buffer.data());
  if (ok == BROTLI_FALSE) {
    throw Error("Brotli encoder failed on " + std::to_string(input_size) + " input bytes");
  }
  out.insert(out.end(), buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(encoded_size));
}

void brotli_decode(std::span<const std::uint8_t> in, std::span<std::uint32_t> out) {
  std::unique_ptr<BrotliDecoderState, DecoderDeleter> state(
      BrotliDecoderCreateInstance(nullptr, nullptr, nullptr));
  if (!state) throw Error("Brotli decoder allocation failed");

  std::size_t available_in = in.size();
  const std::uint8_t* next_in = in.data();
  std::size_t available_out = out.size() * 4;
  auto* next_out = reinterpret_cast<std::uint8_t*>(out.data());

  const BrotliDecoderResult result = BrotliDecoderDecompressStream(
      state.get(), &available_in, &next_in, &available_out, &next_out, nullptr);
  const std::size_t consumed = in.size() - available_in;
  switch (result) {
    case BROTLI_DECODER_RESULT_SUCCESS:
      if (available_out != 0) {
        throw CodecError("Brotli", consumed,
                         "stream ended after " + std::to_string(out.size() * 4 - available_out) +
                             " of " + std::to_string(out.size() * 4) + " bytes");
      }
      if (available_in != 0) throw CodecError("Brotli", consumed, "trailing bytes after stream");
      return;
    case BROTLI_DECODER_RESULT_NEEDS_MORE_INPUT:
      throw CodecError("Brotli", consumed, "truncated stream");
    case BROTLI_DECODER_RESULT_NEEDS_MORE_OUTPUT:
      throw CodecError("Brotli", consumed, "stream decodes to more than the declared value count");
    case BROTLI_DECODER_RESULT_ERROR:
    default:
      throw CodecError("Brotli", consumed,
                       BrotliDecoderErrorString(BrotliDecoderGetErrorCode(state.get())));
  }
}

}  // namespace colcrunch::codecs::detail
