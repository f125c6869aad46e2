#include <doctest.h>

#include <chrono>
#include <fstream>
#include <numeric>
#include <thread>

#include "colcrunch/buffer/buffer_manager.hpp"
#include "support/buffer_stress.hpp"
#include "support/generators.hpp"
#include "support/temp_dir.hpp"

using namespace colcrunch;
using namespace colcrunch::buffer;
using codecs::CodecId;

namespace {

constexpr std::uint32_t kPage = 4096;  // 1024 values per page

struct Fixture {
  testing::TempDir dir;
  std::vector<std::vector<std::uint32_t>> columns;
  std::vector<std::shared_ptr<const storage::ColumnFile>> files;

  std::shared_ptr<const storage::ColumnFile> add(const std::vector<std::uint32_t>& v, CodecId c) {
    const auto path = dir.path() / ("c" + std::to_string(files.size()) + ".pcf");
    storage::write_column(v, c, kPage, path);
    columns.push_back(v);
    files.push_back(std::make_shared<const storage::ColumnFile>(storage::ColumnFile::open(path)));
    return files.back();
  }

  std::unique_ptr<BufferManager> manager(std::uint32_t capacity, std::uint32_t io_threads = 1) {
    return std::make_unique<BufferManager>(files, BufferConfig{capacity, io_threads, 4}, kPage);
  }
};

std::vector<std::uint32_t> iota_values(std::size_t n, std::uint32_t start = 0) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), start);
  return v;
}

}  // namespace

TEST_CASE("cold fetch reads one page and a second fetch hits") {
  Fixture fx;
  const auto f = fx.add(iota_values(3000), CodecId::VByte);
  auto bm = fx.manager(8);
  auto acct = std::make_shared<QueryAccount>();
  {
    auto b = bm->fetch({0, 1}, acct);
    CHECK(b.header().value_count == 1024);
    CHECK(b.header().first_global_position == 1024);
    CHECK(b.values()[0] == 1024);
    const auto s = bm->stats();
    CHECK(s.total().pages_loaded == 1);
    CHECK(s.total().bytes_read == f->page_index()[1].compressed_len);
    CHECK(acct->bytes_read == f->page_index()[1].compressed_len);
    CHECK(acct->trace().size() == 1);
  }
  auto again = bm->fetch({0, 1});
  const auto s = bm->stats();
  CHECK(s.total().pages_loaded == 1);
  CHECK(s.hits == 1);
  CHECK(s.misses == 1);
  auto tail = bm->fetch({0, 2});
  CHECK(tail.header().value_count == 3000 - 2048);
  CHECK_THROWS_AS(bm->fetch({0, 3}), ContractError);
  CHECK_THROWS_AS(bm->fetch({1, 0}), ContractError);
}

TEST_CASE("capacity one evicts in order") {
  Fixture fx;
  fx.add(iota_values(2048), CodecId::Raw);
  auto bm = fx.manager(1);
  {
    auto a = bm->fetch({0, 0});
    a.unpin();
  }
  {
    auto b = bm->fetch({0, 1});
    CHECK(b.values()[0] == 1024);
  }
  auto a = bm->fetch({0, 0});
  CHECK(a.values()[5] == 5);
  const auto s = bm->stats();
  CHECK(s.total().pages_loaded == 3);
  CHECK(s.evictions == 2);
  CHECK(bm->check_invariants() == 0);
}

TEST_CASE("pin protocol") {
  Fixture fx;
  fx.add(iota_values(2048), CodecId::PFor);
  auto bm = fx.manager(1);

  SUBCASE("pin then unpin makes the page evictable") {
    auto a = bm->fetch({0, 0});
    CHECK(bm->pin_count({0, 0}) == 1);
    a.unpin();
    CHECK(bm->pin_count({0, 0}) == 0);
    auto b = bm->fetch({0, 1});
    CHECK_FALSE(bm->is_resident({0, 0}));
  }
  SUBCASE("two fetches and one unpin keep the page pinned") {
    auto a1 = bm->fetch({0, 0});
    auto a2 = bm->fetch({0, 0});
    a1.unpin();
    CHECK(bm->pin_count({0, 0}) == 1);
    CHECK_THROWS_AS(bm->fetch({0, 1}), ResourceError);
    CHECK(bm->is_resident({0, 0}));
  }
  SUBCASE("double unpin is a contract error") {
    auto a = bm->fetch({0, 0});
    a.unpin();
    CHECK_THROWS_AS(a.unpin(), ContractError);
  }
  SUBCASE("moved-from handles do not unpin") {
    auto a = bm->fetch({0, 0});
    PinnedBlock b = std::move(a);
    CHECK_FALSE(a.pinned());
    CHECK(bm->pin_count({0, 0}) == 1);
    b = PinnedBlock{};
    CHECK(bm->pin_count({0, 0}) == 0);
  }
  CHECK(bm->check_invariants() == 0);
}

TEST_CASE("prefetch") {
  Fixture fx;
  fx.add(iota_values(4096), CodecId::BinaryPacking128);
  auto bm = fx.manager(2);

  SUBCASE("prefetched page is a hit once loaded") {
    const PageRef r{0, 2};
    bm->prefetch(std::span(&r, 1));
    bm->drain();
    CHECK(bm->is_resident(r));
    auto b = bm->fetch(r);
    const auto s = bm->stats();
    CHECK(s.hits == 1);
    CHECK(s.misses == 0);
    CHECK(s.prefetch_hits == 1);
    CHECK(s.total().pages_loaded == 1);
    CHECK(b.values()[0] == 2048);
  }
  SUBCASE("prefetch of a resident page is a no-op") {
    auto b = bm->fetch({0, 0});
    const PageRef r{0, 0};
    bm->prefetch(std::span(&r, 1));
    bm->drain();
    const auto s = bm->stats();
    CHECK(s.prefetch_dropped == 1);
    CHECK(s.total().pages_loaded == 1);
  }
  SUBCASE("prefetch without an evictable slot is skipped") {
    auto a = bm->fetch({0, 0});
    auto b = bm->fetch({0, 1});
    const std::vector<PageRef> refs = {{0, 2}, {0, 3}};
    bm->prefetch(refs);
    const auto s = bm->stats();
    CHECK(s.prefetch_skipped == 2);
    CHECK(s.prefetch_issued == 0);
    CHECK(bm->is_resident({0, 0}));
    CHECK(bm->is_resident({0, 1}));
  }
  SUBCASE("invalid refs are counted, not thrown") {
    const PageRef r{0, 99};
    bm->prefetch(std::span(&r, 1));
    CHECK(bm->stats().prefetch_failed == 1);
  }
  CHECK(bm->check_invariants() == 0);
}

TEST_CASE("stats snapshot and reset") {
  Fixture fx;
  // A single page whose VByte body is exactly 1000 bytes: 1000 values below 128.
  const auto f = fx.add(std::vector<std::uint32_t>(1000, 7), CodecId::VByte);
  REQUIRE(f->page_index()[0].compressed_len == 1000);
  auto bm = fx.manager(4);
  const auto t0 = std::chrono::steady_clock::now();
  bm->fetch({0, 0});
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto s = bm->stats().total();
  CHECK(s.bytes_read == 1000);
  CHECK(s.pages_loaded == 1);
  CHECK(s.read_seconds() <= wall);
  CHECK(s.decompress_seconds() <= wall);
  CHECK(s.read_ns + s.decompress_ns <= s.busy_ns);

  bm->reset_stats();
  const auto z = bm->stats();
  CHECK(z.total().bytes_read == 0);
  CHECK(z.total().pages_loaded == 0);
  CHECK(z.total().busy_ns == 0);
  CHECK(z.hits == 0);
  CHECK(z.misses == 0);
}

TEST_CASE("served pages equal direct decompression for every codec") {
  Fixture fx;
  for (CodecId c : codecs::kAllCodecs) {
    fx.add(testing::generate(testing::Distribution::UniformWidths, 5000, 77), c);
  }
  auto bm = fx.manager(3, 2);
  for (ColumnId col = 0; col < fx.files.size(); ++col) {
    for (std::uint32_t p = 0; p < fx.files[col]->header().total_pages; ++p) {
      auto b = bm->fetch({col, p});
      const auto payload = fx.files[col]->read_page_bytes(p);
      const auto direct = codecs::decompress_values(payload.codec, payload.bytes, payload.value_count);
      CHECK(std::equal(b.values().begin(), b.values().end(), direct.begin(), direct.end()));
    }
  }
  CHECK(bm->check_invariants() == 0);
}

TEST_CASE("string pages are served through the slot directory") {
  testing::TempDir dir;
  std::vector<std::string> s;
  for (int i = 0; i < 3000; ++i) s.push_back("name#" + std::to_string(i));
  storage::write_string_column(s, kPage, dir.path() / "s.pcf");
  std::vector<std::shared_ptr<const storage::ColumnFile>> files = {
      std::make_shared<const storage::ColumnFile>(storage::ColumnFile::open(dir.path() / "s.pcf"))};
  BufferManager bm(files, {2, 1, 0}, kPage);
  std::size_t seen = 0;
  for (std::uint32_t p = 0; p < files[0]->header().total_pages; ++p) {
    auto b = bm.fetch({0, p});
    CHECK_THROWS_AS(b.values(), TypeError);
    const auto view = b.strings();
    for (std::uint32_t i = 0; i < view.size(); ++i) CHECK(view.at(i) == s[seen++]);
  }
  CHECK(seen == s.size());
}

TEST_CASE("load failures surface with the page identity and are retried") {
  Fixture fx;
  const auto f = fx.add(std::vector<std::uint32_t>(2048, 300), CodecId::VByte);
  const auto path = f->path();
  // Turn the last byte of page 1 into a dangling continuation byte.
  {
    const auto& e = f->page_index()[1];
    std::fstream io(path, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(static_cast<std::streamoff>(e.offset + e.compressed_len - 1));
    io.put(static_cast<char>(0x80));
  }
  auto bm = fx.manager(2);
  auto ok = bm->fetch({0, 0});
  CHECK(ok.values()[0] == 300);
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      bm->fetch({0, 1});
      FAIL("expected PageLoadError");
    } catch (const PageLoadError& e) {
      CHECK(e.ref() == PageRef{0, 1});
      CHECK(std::string(e.what()).find("page 1") != std::string::npos);
    }
  }
  CHECK(bm->stats().load_failures == 2);
  CHECK_FALSE(bm->is_resident({0, 1}));
  CHECK(bm->check_invariants() == 0);
}

TEST_CASE("concurrent fetchers of one page share a single read") {
  Fixture fx;
  fx.add(testing::generate(testing::Distribution::Zipf, 1024, 5), CodecId::Brotli);
  auto bm = fx.manager(4, 2);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      auto b = bm->fetch({0, 0});
      CHECK(b.values().size() == 1024);
    });
  }
  for (auto& t : threads) t.join();
  const auto s = bm->stats();
  CHECK(s.total().pages_loaded == 1);
  CHECK(s.misses == 1);
  CHECK(s.hits + s.inflight_joins == 7);
}

TEST_CASE("clear empties the pool") {
  Fixture fx;
  fx.add(iota_values(3000), CodecId::Raw);
  auto bm = fx.manager(4);
  {
    auto b = bm->fetch({0, 0});
    CHECK_THROWS_AS(bm->clear(), ContractError);
  }
  bm->clear();
  CHECK(bm->resident_pages() == 0);
  bm->fetch({0, 0});
  CHECK(bm->stats().total().pages_loaded == 2);
}

TEST_CASE("randomized concurrent workload keeps the pool consistent") {
  Fixture fx;
  const CodecId codecs_used[] = {CodecId::Raw, CodecId::FastPFor128, CodecId::Brotli};
  std::vector<std::vector<std::vector<std::uint32_t>>> expected;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = testing::generate(testing::Distribution::UniformWidths, 40 * 1024, i);
    fx.add(v, codecs_used[i]);
    auto& pages = expected.emplace_back();
    for (std::size_t p = 0; p < v.size(); p += 1024) pages.emplace_back(v.begin() + p, v.begin() + p + 1024);
  }
  auto bm = fx.manager(16, 2);
  const auto r = testing::run_buffer_stress(*bm, expected, {8, 20000, 2, 3});
  CHECK(r.violations() == 0);
  CHECK(r.max_resident <= 16);
  CHECK(r.fetches > 0);
  CHECK(bm->stats().evictions > 0);
}
