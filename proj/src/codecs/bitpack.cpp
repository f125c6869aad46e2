#include "bitpack.hpp"

#include <array>
#include <cstring>
#include <utility>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace colcrunch::codecs::detail {

namespace {

inline std::uint32_t load32(const std::uint8_t* p) {
  std::uint32_t v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store32(std::uint8_t* p, std::uint32_t v) { std::memcpy(p, &v, sizeof(v)); }

constexpr std::uint32_t width_mask(unsigned w) {
  return w >= 32 ? 0xFFFFFFFFu : ((std::uint32_t{1} << w) - 1u);
}

// ---------------------------------------------------------------------------
// Sequential layout

template <unsigned W, std::size_t I>
inline void seq_step(const std::uint8_t* in, std::uint32_t* out) {
  constexpr unsigned bit = static_cast<unsigned>(I) * W;
  constexpr unsigned word = bit >> 5;
  constexpr unsigned off = bit & 31u;
  std::uint32_t v = load32(in + 4 * word) >> off;
  if constexpr (off + W > 32) {
    v |= load32(in + 4 * (word + 1)) << (32 - off);
  }
  out[I] = v & width_mask(W);
}

template <unsigned W, std::size_t... I>
inline void seq_unpack(const std::uint8_t* in, std::uint32_t* out, std::index_sequence<I...>) {
  (seq_step<W, I>(in, out), ...);
}

template <unsigned W>
void unpack_sequential_w(const std::uint8_t* in, std::uint32_t* out) {
  if constexpr (W == 0) {
    std::memset(out, 0, 128 * sizeof(std::uint32_t));
  } else {
    seq_unpack<W>(in, out, std::make_index_sequence<128>{});
  }
}

// ---------------------------------------------------------------------------
// Interleaved layout, one lane word at a time

template <unsigned W, std::size_t K>
inline void lane_step_scalar(const std::uint8_t* in, std::uint32_t* out) {
  constexpr unsigned bit = static_cast<unsigned>(K) * W;
  constexpr unsigned word = bit >> 5;
  constexpr unsigned off = bit & 31u;
  for (unsigned lane = 0; lane < 4; ++lane) {
    std::uint32_t v = load32(in + 4 * (4 * word + lane)) >> off;
    if constexpr (off + W > 32) {
      v |= load32(in + 4 * (4 * (word + 1) + lane)) << (32 - off);
    }
    out[4 * K + lane] = v & width_mask(W);
  }
}

template <unsigned W, std::size_t... K>
inline void lane_unpack_scalar(const std::uint8_t* in, std::uint32_t* out,
                               std::index_sequence<K...>) {
  (lane_step_scalar<W, K>(in, out), ...);
}

template <unsigned W>
void unpack_interleaved_scalar_w(const std::uint8_t* in, std::uint32_t* out) {
  if constexpr (W == 0) {
    std::memset(out, 0, 128 * sizeof(std::uint32_t));
  } else {
    lane_unpack_scalar<W>(in, out, std::make_index_sequence<32>{});
  }
}

#if defined(__SSE2__)

template <unsigned W, std::size_t K>
inline void lane_step_sse(const __m128i* in, std::uint32_t* out, __m128i mask) {
  constexpr unsigned bit = static_cast<unsigned>(K) * W;
  constexpr unsigned word = bit >> 5;
  constexpr unsigned off = bit & 31u;
  __m128i v = _mm_srli_epi32(_mm_loadu_si128(in + word), off);
  if constexpr (off + W > 32) {
    v = _mm_or_si128(v, _mm_slli_epi32(_mm_loadu_si128(in + word + 1), 32 - off));
  }
  if constexpr (W < 32) {
    v = _mm_and_si128(v, mask);
  }
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 4 * K), v);
}

template <unsigned W, std::size_t... K>
inline void lane_unpack_sse(const __m128i* in, std::uint32_t* out, __m128i mask,
                            std::index_sequence<K...>) {
  (lane_step_sse<W, K>(in, out, mask), ...);
}

template <unsigned W>
void unpack_interleaved_vec_w(const std::uint8_t* in, std::uint32_t* out) {
  if constexpr (W == 0) {
    std::memset(out, 0, 128 * sizeof(std::uint32_t));
  } else {
    const __m128i mask = _mm_set1_epi32(static_cast<int>(width_mask(W)));
    lane_unpack_sse<W>(reinterpret_cast<const __m128i*>(in), out, mask,
                       std::make_index_sequence<32>{});
  }
}

#else

// Portable stand-in: processes the four lanes of a word in lock step, which
// compilers turn into vector code where the target allows it.
template <unsigned W>
void unpack_interleaved_vec_w(const std::uint8_t* in, std::uint32_t* out) {
  if constexpr (W == 0) {
    std::memset(out, 0, 128 * sizeof(std::uint32_t));
  } else {
    for (unsigned k = 0; k < 32; ++k) {
      const unsigned bit = k * W;
      const unsigned word = bit >> 5;
      const unsigned off = bit & 31u;
      std::uint32_t lo[4];
      std::memcpy(lo, in + 16 * word, 16);
      std::uint32_t hi[4] = {0, 0, 0, 0};
      if (off + W > 32) std::memcpy(hi, in + 16 * (word + 1), 16);
      for (unsigned lane = 0; lane < 4; ++lane) {
        std::uint32_t v = lo[lane] >> off;
        if (off + W > 32) v |= hi[lane] << (32 - off);
        out[4 * k + lane] = v & width_mask(W);
      }
    }
  }
}

#endif

using UnpackFn = void (*)(const std::uint8_t*, std::uint32_t*);

template <template <unsigned> class Tag, std::size_t... W>
constexpr std::array<UnpackFn, 33> make_table(std::index_sequence<W...>) {
  return {&Tag<W>::run...};
}

template <unsigned W>
struct SeqTag {
  static void run(const std::uint8_t* in, std::uint32_t* out) { unpack_sequential_w<W>(in, out); }
};
template <unsigned W>
struct ScalarTag {
  static void run(const std::uint8_t* in, std::uint32_t* out) {
    unpack_interleaved_scalar_w<W>(in, out);
  }
};
template <unsigned W>
struct VecTag {
  static void run(const std::uint8_t* in, std::uint32_t* out) {
    unpack_interleaved_vec_w<W>(in, out);
  }
};

constexpr auto kSequential = make_table<SeqTag>(std::make_index_sequence<33>{});
constexpr auto kInterleavedScalar = make_table<ScalarTag>(std::make_index_sequence<33>{});
constexpr auto kInterleavedVec = make_table<VecTag>(std::make_index_sequence<33>{});

}  // namespace

void pack_sequential(const std::uint32_t* in, unsigned width, std::uint8_t* out) {
  if (width == 0) return;
  std::array<std::uint32_t, 128> words{};
  const std::uint32_t mask = width_mask(width);
  for (unsigned i = 0; i < 128; ++i) {
    const std::uint32_t v = in[i] & mask;
    const unsigned bit = i * width;
    const unsigned word = bit >> 5;
    const unsigned off = bit & 31u;
    words[word] |= v << off;
    if (off + width > 32) words[word + 1] |= v >> (32 - off);
  }
  for (unsigned m = 0; m < 4 * width; ++m) store32(out + 4 * m, words[m]);
}

void unpack_sequential(const std::uint8_t* in, unsigned width, std::uint32_t* out) {
  kSequential[width](in, out);
}

void pack_interleaved(const std::uint32_t* in, unsigned width, std::uint8_t* out) {
  if (width == 0) return;
  std::array<std::uint32_t, 128> words{};
  const std::uint32_t mask = width_mask(width);
  for (unsigned lane = 0; lane < 4; ++lane) {
    for (unsigned k = 0; k < 32; ++k) {
      const std::uint32_t v = in[4 * k + lane] & mask;
      const unsigned bit = k * width;
      const unsigned word = bit >> 5;
      const unsigned off = bit & 31u;
      words[4 * word + lane] |= v << off;
      if (off + width > 32) words[4 * (word + 1) + lane] |= v >> (32 - off);
    }
  }
  for (unsigned m = 0; m < 4 * width; ++m) store32(out + 4 * m, words[m]);
}

void unpack_interleaved_scalar(const std::uint8_t* in, unsigned width, std::uint32_t* out) {
  kInterleavedScalar[width](in, out);
}

void unpack_interleaved_vectorized(const std::uint8_t* in, unsigned width, std::uint32_t* out) {
  kInterleavedVec[width](in, out);
}

bool vectorized_uses_simd() {
#if defined(__SSE2__)
  return true;
#else
  return false;
#endif
}

}  // namespace colcrunch::codecs::detail
