#pragma once

// Fixed-capacity pool of decompressed pages. Only the I/O threads touch the
// disk: they read a page's compressed extent, decode it straight into a slot
// and then publish it. Callers block in fetch() until their page is ready.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <unordered_map>
#include <vector>

#include "colcrunch/error.hpp"
#include "colcrunch/storage/column_file.hpp"

namespace colcrunch::buffer {

/// Index of a column in the manager's file list.
using ColumnId = std::uint32_t;

struct PageRef {
  ColumnId column = 0;
  std::uint32_t page_no = 0;
  bool operator==(const PageRef&) const = default;
};

struct BufferConfig {
  std::uint32_t capacity_pages = 16384;
  std::uint32_t io_threads = 2;
  std::uint32_t prefetch_window = 4;
};

struct ValBlockHeader {
  PageRef ref;
  std::uint32_t value_count = 0;
  std::uint64_t first_global_position = 0;
};

/// Per-I/O-thread action accounting.
struct IoStats {
  std::uint64_t read_ns = 0;
  std::uint64_t decompress_ns = 0;
  std::uint64_t busy_ns = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t pages_loaded = 0;

  IoStats& operator+=(const IoStats& o);
  double read_seconds() const { return read_ns * 1e-9; }
  double decompress_seconds() const { return decompress_ns * 1e-9; }
  double busy_seconds() const { return busy_ns * 1e-9; }
};

struct BufferStats {
  std::vector<IoStats> per_thread;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t inflight_joins = 0;  // fetches that waited on a load already under way
  std::uint64_t evictions = 0;
  std::uint64_t prefetch_issued = 0;
  std::uint64_t prefetch_dropped = 0;  // page already resident or loading
  std::uint64_t prefetch_skipped = 0;  // no evictable slot
  std::uint64_t prefetch_failed = 0;
  std::uint64_t prefetch_hits = 0;     // first fetch of a page an I/O thread preloaded
  std::uint64_t load_failures = 0;

  IoStats total() const;
};

struct TracedLoad {
  PageRef ref;
  std::uint32_t compressed_len = 0;
};

/// Charges I/O work and blocked time to one query. Held by shared_ptr so
/// loads still in flight when the query ends stay valid.
struct QueryAccount {
  std::atomic<std::uint64_t> fetch_ns{0};
  std::atomic<std::uint64_t> read_ns{0};
  std::atomic<std::uint64_t> decompress_ns{0};
  std::atomic<std::uint64_t> bytes_read{0};
  std::atomic<std::uint64_t> pages_loaded{0};

  void record_load(const TracedLoad& load);
  std::vector<TracedLoad> trace() const;

 private:
  mutable std::mutex trace_mu_;
  std::vector<TracedLoad> trace_;
};

/// A page load failed on the I/O thread.
class PageLoadError : public Error {
 public:
  PageLoadError(PageRef ref, const std::string& what) : Error(what), ref_(ref) {}
  PageRef ref() const noexcept { return ref_; }

 private:
  PageRef ref_;
};

class BufferManager;

/// A pinned page. Unpins on destruction unless unpin() was called.
class PinnedBlock {
 public:
  PinnedBlock() = default;
  PinnedBlock(PinnedBlock&& other) noexcept { *this = std::move(other); }
  PinnedBlock& operator=(PinnedBlock&& other) noexcept;
  PinnedBlock(const PinnedBlock&) = delete;
  PinnedBlock& operator=(const PinnedBlock&) = delete;
  ~PinnedBlock();

  bool pinned() const { return pinned_; }
  const ValBlockHeader& header() const { return header_; }
  storage::ValueType value_type() const { return type_; }

  /// Decoded values of a u32 page.
  std::span<const std::uint32_t> values() const;
  /// Slot-directory view of a raw-bytes page.
  storage::StringPageView strings() const;

  /// Throws ContractError when already unpinned.
  void unpin();

 private:
  friend class BufferManager;

  BufferManager* owner_ = nullptr;
  std::uint32_t slot_ = 0;
  std::uint64_t generation_ = 0;
  bool pinned_ = false;
  ValBlockHeader header_;
  storage::ValueType type_ = storage::ValueType::U32;
  const std::uint8_t* data_ = nullptr;
  std::size_t byte_len_ = 0;
};

class BufferManager {
 public:
  /// `slot_bytes` is the decoded size of one page: values_per_page * 4 for
  /// u32 columns, at least the largest page body for raw-bytes columns.
  BufferManager(std::vector<std::shared_ptr<const storage::ColumnFile>> files,
                BufferConfig config, std::uint32_t slot_bytes = storage::kDefaultPageSize);
  ~BufferManager();
  BufferManager(const BufferManager&) = delete;
  BufferManager& operator=(const BufferManager&) = delete;

  /// Blocks until the page is resident and returns it pinned.
  PinnedBlock fetch(PageRef ref, const std::shared_ptr<QueryAccount>& account = nullptr);

  /// Best-effort asynchronous loads; never waits and never evicts pinned pages.
  void prefetch(std::span<const PageRef> refs,
                const std::shared_ptr<QueryAccount>& account = nullptr);

  /// Waits until no load is queued or running.
  void drain();

  /// Drains, then empties the pool. Throws ContractError while pages are pinned.
  void clear();

  BufferStats stats() const;
  void reset_stats();

  const BufferConfig& config() const { return config_; }
  std::uint32_t slot_bytes() const { return slot_bytes_; }
  const storage::ColumnFile& file(ColumnId c) const { return *files_.at(c); }
  std::size_t column_count() const { return files_.size(); }

  std::size_t resident_pages() const;
  bool is_resident(PageRef ref) const;
  /// Pin count of a resident page, 0 when absent.
  std::uint32_t pin_count(PageRef ref) const;

  /// Checks slot-table consistency; returns the number of problems found
  /// plus any pin-protocol violations observed so far.
  std::uint64_t check_invariants() const;

 private:
  friend class PinnedBlock;

  enum class SlotState : std::uint8_t { Free, Loading, Ready, Failed };

  struct Slot {
    SlotState state = SlotState::Free;
    PageRef ref;
    std::uint32_t pins = 0;
    bool referenced = false;
    bool prefetched = false;
    std::uint64_t generation = 0;
    std::uint32_t value_count = 0;
    std::size_t byte_len = 0;
    std::string error;
  };

  struct Request {
    std::uint32_t slot;
    std::uint64_t generation;
    PageRef ref;
    std::shared_ptr<QueryAccount> account;
  };

  static std::uint64_t key(PageRef r) { return (std::uint64_t{r.column} << 32) | r.page_no; }

  void check_ref(PageRef ref) const;
  std::uint8_t* slot_data(std::uint32_t slot) const;
  /// Free slot or CLOCK victim; requires the lock. Returns false if none.
  bool acquire_slot(std::uint32_t& slot);
  void release_slot(std::uint32_t slot);
  void start_load(std::uint32_t slot, PageRef ref, bool prefetched,
                  std::shared_ptr<QueryAccount> account);
  PinnedBlock make_handle(std::uint32_t slot);
  void unpin_slot(std::uint32_t slot, std::uint64_t generation, PageRef ref);
  void io_loop(std::size_t thread_index);

  std::vector<std::shared_ptr<const storage::ColumnFile>> files_;
  BufferConfig config_;
  std::uint32_t slot_bytes_;
  std::unique_ptr<std::uint32_t[]> memory_;

  mutable std::mutex mu_;
  std::condition_variable ready_cv_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> free_slots_;
  std::unordered_map<std::uint64_t, std::uint32_t> page_table_;
  std::deque<Request> queue_;
  std::uint32_t clock_hand_ = 0;
  std::uint32_t active_loads_ = 0;
  std::uint64_t next_generation_ = 1;
  std::uint64_t violations_ = 0;
  bool stopping_ = false;
  BufferStats stats_;
  std::vector<std::thread> io_threads_;
};

}  // namespace colcrunch::buffer
