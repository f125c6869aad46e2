#include "colcrunch/buffer/buffer_manager.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>

namespace colcrunch::buffer {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point from, Clock::time_point to) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(to - from).count());
}

std::string describe(PageRef ref, const storage::ColumnFile& f) {
  return f.path().string() + " page " + std::to_string(ref.page_no) + " (column " +
         std::to_string(ref.column) + ")";
}

}  // namespace

IoStats& IoStats::operator+=(const IoStats& o) {
  read_ns += o.read_ns;
  decompress_ns += o.decompress_ns;
  busy_ns += o.busy_ns;
  bytes_read += o.bytes_read;
  pages_loaded += o.pages_loaded;
  return *this;
}

IoStats BufferStats::total() const {
  IoStats t;
  for (const auto& s : per_thread) t += s;
  return t;
}

void QueryAccount::record_load(const TracedLoad& load) {
  std::lock_guard lk(trace_mu_);
  trace_.push_back(load);
}

std::vector<TracedLoad> QueryAccount::trace() const {
  std::lock_guard lk(trace_mu_);
  return trace_;
}

// ---------------------------------------------------------------- PinnedBlock

PinnedBlock& PinnedBlock::operator=(PinnedBlock&& other) noexcept {
  if (this != &other) {
    if (pinned_) owner_->unpin_slot(slot_, generation_, header_.ref);
    owner_ = other.owner_;
    slot_ = other.slot_;
    generation_ = other.generation_;
    pinned_ = std::exchange(other.pinned_, false);
    header_ = other.header_;
    type_ = other.type_;
    data_ = other.data_;
    byte_len_ = other.byte_len_;
  }
  return *this;
}

PinnedBlock::~PinnedBlock() {
  if (pinned_) owner_->unpin_slot(slot_, generation_, header_.ref);
}

std::span<const std::uint32_t> PinnedBlock::values() const {
  if (type_ != storage::ValueType::U32) throw TypeError("page holds raw bytes, not u32 values");
  return {reinterpret_cast<const std::uint32_t*>(data_), header_.value_count};
}

storage::StringPageView PinnedBlock::strings() const {
  if (type_ != storage::ValueType::Bytes) throw TypeError("page holds u32 values, not raw bytes");
  return {std::span<const std::uint8_t>(data_, byte_len_), header_.value_count};
}

void PinnedBlock::unpin() {
  if (!pinned_) throw ContractError("unpin of a block that is not pinned");
  pinned_ = false;
  owner_->unpin_slot(slot_, generation_, header_.ref);
}

// -------------------------------------------------------------- BufferManager

BufferManager::BufferManager(std::vector<std::shared_ptr<const storage::ColumnFile>> files,
                             BufferConfig config, std::uint32_t slot_bytes)
    : files_(std::move(files)), config_(config), slot_bytes_(slot_bytes) {
  if (config_.capacity_pages == 0) throw ContractError("buffer capacity must be positive");
  if (config_.io_threads == 0) throw ContractError("at least one I/O thread is required");
  if (slot_bytes_ == 0 || slot_bytes_ % 4 != 0) {
    throw ContractError("slot size must be a positive multiple of 4");
  }
  for (const auto& f : files_) {
    const auto& h = f->header();
    if (h.value_type == storage::ValueType::U32) {
      if (std::uint64_t{h.values_per_page} * 4 > slot_bytes_) {
        throw ContractError(f->path().string() + ": page does not fit a " +
                            std::to_string(slot_bytes_) + "-byte slot");
      }
    } else {
      for (const auto& e : f->page_index()) {
        if (e.compressed_len > slot_bytes_) {
          throw ContractError(f->path().string() + ": string page exceeds slot size");
        }
      }
    }
  }
  memory_.reset(new std::uint32_t[std::size_t{config_.capacity_pages} * (slot_bytes_ / 4)]);
  slots_.resize(config_.capacity_pages);
  free_slots_.reserve(config_.capacity_pages);
  for (std::uint32_t i = config_.capacity_pages; i-- > 0;) free_slots_.push_back(i);
  page_table_.reserve(config_.capacity_pages);
  stats_.per_thread.resize(config_.io_threads);
  for (std::uint32_t t = 0; t < config_.io_threads; ++t) {
    io_threads_.emplace_back([this, t] { io_loop(t); });
  }
}

BufferManager::~BufferManager() {
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : io_threads_) t.join();
}

void BufferManager::check_ref(PageRef ref) const {
  if (ref.column >= files_.size()) {
    throw ContractError("unknown column id " + std::to_string(ref.column));
  }
  const auto pages = files_[ref.column]->header().total_pages;
  if (ref.page_no >= pages) {
    throw ContractError(describe(ref, *files_[ref.column]) + " out of range (total " +
                        std::to_string(pages) + ")");
  }
}

std::uint8_t* BufferManager::slot_data(std::uint32_t slot) const {
  return reinterpret_cast<std::uint8_t*>(memory_.get()) + std::size_t{slot} * slot_bytes_;
}

bool BufferManager::acquire_slot(std::uint32_t& slot) {
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
    return true;
  }
  const std::size_t n = slots_.size();
  for (std::size_t step = 0; step < 2 * n; ++step) {
    const std::uint32_t i = clock_hand_;
    clock_hand_ = static_cast<std::uint32_t>((clock_hand_ + 1) % n);
    Slot& s = slots_[i];
    if (s.state != SlotState::Ready || s.pins != 0) continue;
    if (s.referenced) {
      s.referenced = false;
      continue;
    }
    page_table_.erase(key(s.ref));
    s.state = SlotState::Free;
    s.prefetched = false;
    ++stats_.evictions;
    slot = i;
    return true;
  }
  return false;
}

void BufferManager::release_slot(std::uint32_t slot) {
  Slot& s = slots_[slot];
  s.state = SlotState::Free;
  s.pins = 0;
  s.prefetched = false;
  s.error.clear();
  free_slots_.push_back(slot);
}

void BufferManager::start_load(std::uint32_t slot, PageRef ref, bool prefetched,
                               std::shared_ptr<QueryAccount> account) {
  Slot& s = slots_[slot];
  s.state = SlotState::Loading;
  s.ref = ref;
  s.pins = prefetched ? 0 : 1;
  s.referenced = true;
  s.prefetched = prefetched;
  s.generation = next_generation_++;
  s.value_count = 0;
  s.byte_len = 0;
  page_table_[key(ref)] = slot;
  queue_.push_back(Request{slot, s.generation, ref, std::move(account)});
  queue_cv_.notify_one();
}

PinnedBlock BufferManager::make_handle(std::uint32_t slot) {
  const Slot& s = slots_[slot];
  const auto& h = files_[s.ref.column]->header();
  PinnedBlock b;
  b.owner_ = this;
  b.slot_ = slot;
  b.generation_ = s.generation;
  b.pinned_ = true;
  b.header_.ref = s.ref;
  b.header_.value_count = s.value_count;
  b.header_.first_global_position = std::uint64_t{s.ref.page_no} * h.values_per_page;
  b.type_ = h.value_type;
  b.data_ = slot_data(slot);
  b.byte_len_ = s.byte_len;
  return b;
}

void BufferManager::unpin_slot(std::uint32_t slot, std::uint64_t generation, PageRef ref) {
  std::lock_guard lk(mu_);
  Slot& s = slots_[slot];
  if (s.generation != generation || !(s.ref == ref) || s.pins == 0) {
    ++violations_;
    return;
  }
  if (--s.pins == 0) {
    if (s.state == SlotState::Failed) {
      release_slot(slot);
    }
    ready_cv_.notify_all();
  }
}

PinnedBlock BufferManager::fetch(PageRef ref, const std::shared_ptr<QueryAccount>& account) {
  const auto t0 = Clock::now();
  check_ref(ref);
  std::unique_lock lk(mu_);
  std::uint32_t slot = 0;
  for (;;) {
    const auto it = page_table_.find(key(ref));
    if (it != page_table_.end()) {
      slot = it->second;
      Slot& s = slots_[slot];
      ++s.pins;
      s.referenced = true;
      if (s.state == SlotState::Ready) {
        ++stats_.hits;
        if (s.prefetched) ++stats_.prefetch_hits;
      } else {
        ++stats_.inflight_joins;
      }
      s.prefetched = false;
      break;
    }
    if (acquire_slot(slot)) {
      ++stats_.misses;
      start_load(slot, ref, false, account);
      break;
    }
    bool loading = !queue_.empty() || active_loads_ > 0;
    if (!loading) {
      throw ResourceError("buffer exhausted: all " + std::to_string(slots_.size()) +
                          " pages are pinned");
    }
    ready_cv_.wait(lk);
  }

  ready_cv_.wait(lk, [&] { return slots_[slot].state != SlotState::Loading; });
  Slot& s = slots_[slot];
  if (s.state == SlotState::Failed) {
    const std::string msg = s.error;
    if (--s.pins == 0) release_slot(slot);
    lk.unlock();
    if (account) account->fetch_ns += elapsed_ns(t0, Clock::now());
    throw PageLoadError(ref, msg);
  }
  PinnedBlock block = make_handle(slot);
  lk.unlock();
  if (account) account->fetch_ns += elapsed_ns(t0, Clock::now());
  return block;
}

void BufferManager::prefetch(std::span<const PageRef> refs,
                             const std::shared_ptr<QueryAccount>& account) {
  std::lock_guard lk(mu_);
  for (const PageRef& ref : refs) {
    if (ref.column >= files_.size() || ref.page_no >= files_[ref.column]->header().total_pages) {
      ++stats_.prefetch_failed;
      continue;
    }
    if (page_table_.count(key(ref)) != 0) {
      ++stats_.prefetch_dropped;
      continue;
    }
    std::uint32_t slot = 0;
    if (!acquire_slot(slot)) {
      ++stats_.prefetch_skipped;
      continue;
    }
    ++stats_.prefetch_issued;
    start_load(slot, ref, true, account);
  }
}

void BufferManager::io_loop(std::size_t thread_index) {
  std::vector<std::uint8_t> scratch;
  for (;;) {
    std::unique_lock lk(mu_);
    queue_cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
    if (stopping_) return;
    Request req = std::move(queue_.front());
    queue_.pop_front();
    ++active_loads_;
    std::uint8_t* dst = slot_data(req.slot);
    // Busy time runs from dequeue to the end of publication.
    const auto busy_start = Clock::now();
    lk.unlock();

    const storage::ColumnFile& file = *files_[req.ref.column];
    const auto& entry = file.page_index()[req.ref.page_no];
    std::string error;
    std::size_t byte_len = 0;

    const auto read_start = Clock::now();
    auto t_read_end = read_start;
    try {
      file.read_page_into(req.ref.page_no, scratch);
      t_read_end = Clock::now();
      if (file.header().value_type == storage::ValueType::U32) {
        codecs::decompress_into(file.header().codec, scratch,
                                {reinterpret_cast<std::uint32_t*>(dst), entry.value_count});
        byte_len = std::size_t{entry.value_count} * 4;
      } else {
        storage::StringPageView(scratch, entry.value_count);
        std::memcpy(dst, scratch.data(), scratch.size());
        byte_len = scratch.size();
      }
    } catch (const std::exception& e) {
      if (t_read_end == read_start) t_read_end = Clock::now();
      error = describe(req.ref, file) + ": " + e.what();
    }
    const auto decode_end = Clock::now();

    IoStats delta;
    delta.read_ns = elapsed_ns(read_start, t_read_end);
    delta.decompress_ns = elapsed_ns(t_read_end, decode_end);
    delta.bytes_read = error.empty() ? entry.compressed_len : 0;
    delta.pages_loaded = error.empty() ? 1 : 0;
    if (req.account) {
      req.account->read_ns += delta.read_ns;
      req.account->decompress_ns += delta.decompress_ns;
      req.account->bytes_read += delta.bytes_read;
      req.account->pages_loaded += delta.pages_loaded;
      if (error.empty()) req.account->record_load({req.ref, entry.compressed_len});
    }

    lk.lock();
    --active_loads_;
    Slot& s = slots_[req.slot];
    if (error.empty()) {
      s.state = SlotState::Ready;
      s.value_count = entry.value_count;
      s.byte_len = byte_len;
    } else {
      ++stats_.load_failures;
      if (s.prefetched) ++stats_.prefetch_failed;
      s.state = SlotState::Failed;
      s.error = std::move(error);
      page_table_.erase(key(req.ref));
      if (s.pins == 0) release_slot(req.slot);
    }
    ready_cv_.notify_all();
    if (queue_.empty() && active_loads_ == 0) idle_cv_.notify_all();
    delta.busy_ns = elapsed_ns(busy_start, Clock::now());
    stats_.per_thread[thread_index] += delta;
  }
}

void BufferManager::drain() {
  std::unique_lock lk(mu_);
  idle_cv_.wait(lk, [&] { return queue_.empty() && active_loads_ == 0; });
}

void BufferManager::clear() {
  std::unique_lock lk(mu_);
  idle_cv_.wait(lk, [&] { return queue_.empty() && active_loads_ == 0; });
  for (const Slot& s : slots_) {
    if (s.pins != 0) throw ContractError("cannot clear the buffer while pages are pinned");
  }
  page_table_.clear();
  free_slots_.clear();
  for (std::uint32_t i = static_cast<std::uint32_t>(slots_.size()); i-- > 0;) {
    slots_[i] = Slot{};
    free_slots_.push_back(i);
  }
  clock_hand_ = 0;
}

BufferStats BufferManager::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

void BufferManager::reset_stats() {
  std::lock_guard lk(mu_);
  stats_ = BufferStats{};
  stats_.per_thread.resize(config_.io_threads);
}

std::size_t BufferManager::resident_pages() const {
  std::lock_guard lk(mu_);
  return page_table_.size();
}

bool BufferManager::is_resident(PageRef ref) const {
  std::lock_guard lk(mu_);
  const auto it = page_table_.find(key(ref));
  return it != page_table_.end() && slots_[it->second].state == SlotState::Ready;
}

std::uint32_t BufferManager::pin_count(PageRef ref) const {
  std::lock_guard lk(mu_);
  const auto it = page_table_.find(key(ref));
  return it == page_table_.end() ? 0 : slots_[it->second].pins;
}

std::uint64_t BufferManager::check_invariants() const {
  std::lock_guard lk(mu_);
  std::uint64_t problems = violations_;
  if (page_table_.size() > slots_.size()) ++problems;
  std::vector<char> is_free(slots_.size(), 0);
  for (std::uint32_t f : free_slots_) {
    if (f >= slots_.size() || is_free[f]) {
      ++problems;
      continue;
    }
    is_free[f] = 1;
  }
  std::size_t mapped = 0;
  for (std::uint32_t i = 0; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    switch (s.state) {
      case SlotState::Free:
        if (!is_free[i] || s.pins != 0) ++problems;
        break;
      case SlotState::Loading:
      case SlotState::Ready: {
        ++mapped;
        const auto it = page_table_.find(key(s.ref));
        if (is_free[i] || it == page_table_.end() || it->second != i) ++problems;
        break;
      }
      case SlotState::Failed:
        if (is_free[i] || s.pins == 0) ++problems;
        break;
    }
  }
  if (mapped != page_table_.size()) ++problems;
  return problems;
}

}  // namespace colcrunch::buffer
