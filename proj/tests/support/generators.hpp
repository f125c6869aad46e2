#pragma once

// Deterministic value generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace colcrunch::testing {

enum class Distribution { UniformWidths, SortedRuns, Zipf, AllEqual, Empty };

inline constexpr Distribution kAllDistributions[] = {
    Distribution::UniformWidths, Distribution::SortedRuns, Distribution::Zipf,
    Distribution::AllEqual, Distribution::Empty};

inline std::string_view distribution_name(Distribution d) {
  switch (d) {
    case Distribution::UniformWidths: return "uniform-widths";
    case Distribution::SortedRuns: return "sorted-runs";
    case Distribution::Zipf: return "zipf";
    case Distribution::AllEqual: return "all-equal";
    case Distribution::Empty: return "empty";
  }
  return "?";
}

inline std::uint32_t random_width_value(std::mt19937_64& rng) {
  const unsigned width = static_cast<unsigned>(rng() % 33);
  if (width == 0) return 0;
  const std::uint64_t mask = (std::uint64_t{1} << width) - 1;
  // Force the top bit so the value really needs `width` bits.
  return static_cast<std::uint32_t>((rng() & mask) | (std::uint64_t{1} << (width - 1)));
}

/// Zipf(s = 1.1) over ranks 1..universe via inverse CDF.
class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t universe, double s = 1.1) : cdf_(universe) {
    double acc = 0;
    for (std::size_t k = 0; k < universe; ++k) {
      acc += 1.0 / std::pow(static_cast<double>(k + 1), s);
      cdf_[k] = acc;
    }
    for (double& c : cdf_) c /= acc;
  }
  std::uint32_t operator()(std::mt19937_64& rng) const {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                                static_cast<std::ptrdiff_t>(cdf_.size()) - 1) +
                                      1);
  }

 private:
  std::vector<double> cdf_;
};

inline std::vector<std::uint32_t> generate(Distribution d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> v;
  if (d == Distribution::Empty) return v;
  v.reserve(n);
  switch (d) {
    case Distribution::UniformWidths:
      for (std::size_t i = 0; i < n; ++i) v.push_back(random_width_value(rng));
      break;
    case Distribution::SortedRuns: {
      std::uint32_t cur = static_cast<std::uint32_t>(rng() % 1000);
      while (v.size() < n) {
        const std::size_t run = 1 + rng() % 300;
        for (std::size_t i = 0; i < run && v.size() < n; ++i) {
          cur += static_cast<std::uint32_t>(rng() % 8);
          v.push_back(cur);
        }
        cur = static_cast<std::uint32_t>(rng() % 100000);
      }
      break;
    }
    case Distribution::Zipf: {
      static const ZipfSampler sampler(1 << 16);
      for (std::size_t i = 0; i < n; ++i) v.push_back(sampler(rng));
      break;
    }
    case Distribution::AllEqual:
      v.assign(n, static_cast<std::uint32_t>(rng()));
      break;
    case Distribution::Empty:
      break;
  }
  return v;
}

}  // namespace colcrunch::testing
