#pragma once

// Randomized concurrent workload against a BufferManager. Each worker mixes
// fetch / unpin / prefetch, holds a few pins at a time and re-verifies page
// contents at unpin time, which catches a pinned slot being reused.

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>
#include <vector>

#include "colcrunch/buffer/buffer_manager.hpp"

namespace colcrunch::testing {

struct StressOptions {
  unsigned workers = 16;
  std::uint64_t total_ops = 100000;
  unsigned max_pins_per_worker = 3;
  std::uint64_t seed = 1;
};

struct StressResult {
  std::uint64_t ops = 0;
  std::uint64_t fetches = 0;
  std::uint64_t prefetches = 0;
  std::uint64_t content_mismatches = 0;
  std::uint64_t capacity_violations = 0;
  std::uint64_t invariant_violations = 0;
  std::uint64_t unexpected_errors = 0;
  std::uint64_t max_resident = 0;

  std::uint64_t violations() const {
    return content_mismatches + capacity_violations + invariant_violations + unexpected_errors;
  }
};

/// `expected[c][p]` holds the decoded values of page p of column c.
inline StressResult run_buffer_stress(
    buffer::BufferManager& bm,
    const std::vector<std::vector<std::vector<std::uint32_t>>>& expected,
    const StressOptions& opt) {
  std::atomic<std::uint64_t> next_op{0};
  std::atomic<std::uint64_t> fetches{0}, prefetches{0}, mismatches{0}, over_capacity{0},
      errors{0}, max_resident{0};
  std::atomic<bool> done{false};
  const std::uint64_t capacity = bm.config().capacity_pages;

  auto matches = [&](const buffer::PinnedBlock& b) {
    const auto& want = expected[b.header().ref.column][b.header().ref.page_no];
    const auto got = b.values();
    return std::equal(got.begin(), got.end(), want.begin(), want.end());
  };
  auto observe_residency = [&] {
    const std::uint64_t r = bm.resident_pages();
    if (r > capacity) ++over_capacity;
    std::uint64_t m = max_resident.load();
    while (r > m && !max_resident.compare_exchange_weak(m, r)) {
    }
  };

  std::vector<std::thread> threads;
  for (unsigned w = 0; w < opt.workers; ++w) {
    threads.emplace_back([&, w] {
      std::mt19937_64 rng(opt.seed * 1000003 + w);
      std::vector<buffer::PinnedBlock> held;
      auto random_ref = [&] {
        const auto c = static_cast<buffer::ColumnId>(rng() % expected.size());
        const auto p = static_cast<std::uint32_t>(rng() % expected[c].size());
        return buffer::PageRef{c, p};
      };
      while (next_op.fetch_add(1) < opt.total_ops) {
        try {
          const unsigned kind = static_cast<unsigned>(rng() % 10);
          if (kind < 5 && held.size() < opt.max_pins_per_worker) {
            auto b = bm.fetch(random_ref());
            ++fetches;
            if (!matches(b)) ++mismatches;
            held.push_back(std::move(b));
          } else if (kind < 8 && !held.empty()) {
            const std::size_t i = rng() % held.size();
            if (!matches(held[i])) ++mismatches;
            held[i].unpin();
            held.erase(held.begin() + static_cast<std::ptrdiff_t>(i));
          } else {
            const auto start = random_ref();
            std::vector<buffer::PageRef> refs;
            const auto pages = static_cast<std::uint32_t>(expected[start.column].size());
            for (std::uint32_t k = 0; k < 4 && start.page_no + k < pages; ++k) {
              refs.push_back({start.column, start.page_no + k});
            }
            bm.prefetch(refs);
            ++prefetches;
          }
          observe_residency();
        } catch (...) {
          ++errors;
        }
      }
      for (auto& b : held) {
        if (!matches(b)) ++mismatches;
      }
    });
  }

  std::atomic<std::uint64_t> invariant_problems{0};
  std::thread checker([&] {
    while (!done.load()) {
      invariant_problems += bm.check_invariants();
      observe_residency();
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  });
  for (auto& t : threads) t.join();
  done = true;
  checker.join();
  bm.drain();
  invariant_problems += bm.check_invariants();

  StressResult r;
  r.ops = std::min<std::uint64_t>(next_op.load(), opt.total_ops);
  r.fetches = fetches;
  r.prefetches = prefetches;
  r.content_mismatches = mismatches;
  r.capacity_violations = over_capacity;
  r.invariant_violations = invariant_problems;
  r.unexpected_errors = errors;
  r.max_resident = max_resident;
  return r;
}

}  // namespace colcrunch::testing
