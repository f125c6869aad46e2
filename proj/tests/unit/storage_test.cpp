#include <doctest.h>

#include <fstream>
#include <numeric>
#include <random>

#include "colcrunch/error.hpp"
#include "colcrunch/storage/column_file.hpp"
#include "colcrunch/storage/operations.hpp"
#include "support/generators.hpp"
#include "support/temp_dir.hpp"

using namespace colcrunch;
using namespace colcrunch::storage;
using codecs::CodecId;

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Independent BinaryPacking128 size: one width byte per 128-block plus 16 bytes per bit.
std::size_t enumerate_binpack_size(const std::vector<std::uint32_t>& v) {
  std::size_t total = 0;
  for (std::size_t b = 0; b < v.size(); b += 128) {
    std::uint32_t m = 0;
    for (std::size_t i = b; i < std::min(v.size(), b + 128); ++i) m |= v[i];
    unsigned w = 0;
    while (w < 32 && (m >> w) != 0) ++w;
    total += 1 + 16 * w;
  }
  return total;
}

CatalogEntry named(CatalogEntry e, std::string table, std::string column, std::string path) {
  e.table = std::move(table);
  e.column = std::move(column);
  e.path = std::move(path);
  return e;
}

}  // namespace

TEST_CASE("empty column has a header and no pages") {
  testing::TempDir dir;
  const auto path = dir.path() / "empty.pcf";
  const auto e = write_column({}, CodecId::Raw, kDefaultPageSize, path);
  CHECK(e.total_values == 0);
  CHECK(e.compressed_file_size == kHeaderSize);
  const auto f = ColumnFile::open(path);
  CHECK(f.header().total_pages == 0);
  CHECK(f.page_index().empty());
  CHECK(f.read_all_values().empty());
}

TEST_CASE("raw page of 16384 zeros") {
  testing::TempDir dir;
  const auto path = dir.path() / "z.pcf";
  const std::vector<std::uint32_t> zeros(16384, 0);
  write_column(zeros, CodecId::Raw, kDefaultPageSize, path);
  const auto f = ColumnFile::open(path);
  REQUIRE(f.header().total_pages == 1);
  CHECK(f.page_index()[0].compressed_len == 65536);
  const auto p = f.read_page_bytes(0);
  CHECK(p.bytes.size() == 65536);
  CHECK(p.codec == CodecId::Raw);
  CHECK(p.value_count == 16384);
}

TEST_CASE("header bytes are little-endian with magic PCF1") {
  testing::TempDir dir;
  const auto path = dir.path() / "h.pcf";
  const std::vector<std::uint32_t> v = {7, 8, 9};
  write_column(v, CodecId::VByte, 8, path);
  const auto bytes = slurp(path);
  const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + 24);
  const std::vector<std::uint8_t> want = {'P', 'C', 'F', '1', 1, 1, 0, 0,  //
                                          2,   0,   0,   0,   2, 0, 0, 0,  //
                                          3,   0,   0,   0,   0, 0, 0, 0};
  CHECK(head == want);
  // Page 0 at offset 24 + 2*16 = 56, 2 bytes; page 1 at 58, 1 byte.
  CHECK(bytes[24] == 56);
  CHECK(bytes[32] == 2);
  CHECK(bytes[36] == 2);
  CHECK(bytes[40] == 58);
  CHECK(bytes[48] == 1);
  CHECK(bytes[52] == 1);
  CHECK(bytes.size() == 59);
}

TEST_CASE("16385 zeros under binary packing span two pages") {
  testing::TempDir dir;
  const auto path = dir.path() / "bp.pcf";
  const std::vector<std::uint32_t> zeros(16385, 0);
  write_column(zeros, CodecId::BinaryPacking128, kDefaultPageSize, path);
  const auto f = ColumnFile::open(path);
  REQUIRE(f.header().total_pages == 2);
  const std::vector<std::uint32_t> page1(zeros.begin(), zeros.begin() + 16384);
  CHECK(f.page_index()[0].compressed_len == enumerate_binpack_size(page1));
  CHECK(f.page_index()[0].compressed_len == 128);
  const auto p0 = f.read_page_bytes(0);
  CHECK(std::all_of(p0.bytes.begin(), p0.bytes.end(), [](auto b) { return b == 0; }));

  const auto p1 = f.read_page_bytes(1);
  CHECK(p1.value_count == 1);
  CHECK(p1.bytes.size() == 1);
  CHECK_THROWS_AS(f.read_page_bytes(2), ContractError);
  CHECK(f.read_all_values() == zeros);
}

TEST_CASE("every codec roundtrips through a multi-page file") {
  testing::TempDir dir;
  for (auto dist : testing::kAllDistributions) {
    const auto values = testing::generate(dist, 50000, 11);
    for (CodecId c : codecs::kAllCodecs) {
      CAPTURE(codecs::codec_name(c));
      CAPTURE(testing::distribution_name(dist));
      const auto path = dir.path() / "rt.pcf";
      const auto e = write_column(values, c, 4096, path);
      const auto f = ColumnFile::open(path);
      CHECK(f.read_all_values() == values);
      CHECK(e.compressed_file_size == f.file_size());
      CHECK(e.uncompressed_size == 4 * values.size());
      // Extents tile the data region.
      std::uint64_t cursor = metadata_size(f.header().total_pages);
      for (const auto& pe : f.page_index()) {
        CHECK(pe.offset == cursor);
        cursor += pe.compressed_len;
      }
      CHECK(cursor == f.file_size());
    }
  }
}

TEST_CASE("raw file size is header plus index plus four bytes per value") {
  testing::TempDir dir;
  for (std::size_t n : {0u, 1u, 1023u, 1024u, 1025u, 5000u}) {
    std::vector<std::uint32_t> v(n);
    std::iota(v.begin(), v.end(), 0u);
    const auto e = write_column(v, CodecId::Raw, 4096, dir.path() / "r.pcf");
    const std::uint64_t pages = (n + 1023) / 1024;
    CHECK(e.compressed_file_size == 24 + 16 * pages + 4 * n);
    CHECK(std::filesystem::file_size(dir.path() / "r.pcf") == e.compressed_file_size);
  }
}

TEST_CASE("invalid page sizes are rejected") {
  testing::TempDir dir;
  const std::vector<std::uint32_t> v = {1};
  CHECK_THROWS_AS(write_column(v, CodecId::Raw, 0, dir.path() / "x.pcf"), ContractError);
  CHECK_THROWS_AS(write_column(v, CodecId::Raw, 6, dir.path() / "x.pcf"), ContractError);
}

TEST_CASE("corrupt files are rejected on open") {
  testing::TempDir dir;
  const auto path = dir.path() / "c.pcf";
  std::vector<std::uint32_t> v(3000, 5);
  write_column(v, CodecId::PFor, 4096, path);
  auto bytes = slurp(path);

  auto write_variant = [&](auto mutate) {
    auto copy = bytes;
    mutate(copy);
    const auto p = dir.path() / "bad.pcf";
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(copy.data()),
                                             static_cast<std::streamsize>(copy.size()));
    return p;
  };
  CHECK_THROWS_AS(ColumnFile::open(write_variant([](auto& b) { b[0] = 'X'; })), FormatError);
  CHECK_THROWS_AS(ColumnFile::open(write_variant([](auto& b) { b[4] = 9; })), FormatError);
  CHECK_THROWS_AS(ColumnFile::open(write_variant([](auto& b) { b[5] = 77; })), FormatError);
  CHECK_THROWS_AS(ColumnFile::open(write_variant([](auto& b) { b.resize(30); })), FormatError);
  CHECK_THROWS_AS(ColumnFile::open(write_variant([](auto& b) { b.pop_back(); })), FormatError);
  CHECK_THROWS_AS(ColumnFile::open(dir.path() / "missing.pcf"), IoError);
}

TEST_CASE("string columns use slot-directory pages") {
  testing::TempDir dir;
  std::vector<std::string> s;
  for (int i = 0; i < 5000; ++i) s.push_back("city" + std::to_string(i % 37));
  s.push_back("");
  const auto path = dir.path() / "s.pcf";
  const auto e = write_string_column(s, 4096, path);
  CHECK(e.type == ValueType::Bytes);
  CHECK(e.codec == CodecId::Raw);
  const auto f = ColumnFile::open(path);
  CHECK(f.header().value_type == ValueType::Bytes);
  CHECK(f.read_all_strings() == s);
  CHECK_THROWS_AS(f.read_all_values(), TypeError);
  for (const auto& pe : f.page_index()) CHECK(pe.compressed_len <= 4096);
}

TEST_CASE("catalog roundtrip") {
  testing::TempDir dir;
  SUBCASE("empty catalog") {
    Catalog c(dir.path());
    c.save(dir.path() / "catalog.txt");
    const auto text = slurp(dir.path() / "catalog.txt");
    CHECK(std::string(text.begin(), text.begin() + kCatalogHeader.size()) == kCatalogHeader);
    CHECK(Catalog::load(dir.path() / "catalog.txt").entries().empty());
  }
  SUBCASE("one entry") {
    Catalog c(dir.path());
    CatalogEntry e{"lineorder", "lo_quantity", ValueType::U32, CodecId::FastPFor128,
                   "lineorder.lo_quantity.fastpfor128.pcf", 16384, 600000, 123456, 2400000};
    c.upsert(e);
    c.upsert(CatalogEntry{"part", "p_name", ValueType::Bytes, CodecId::Raw, "part.p_name.pcf", 2000,
                          20, 500, 300});
    c.save(dir.path() / "catalog.txt");
    const auto back = Catalog::load(dir.path() / "catalog.txt");
    CHECK(back.entries() == c.entries());
    CHECK(back.at("lineorder", "lo_quantity") == e);
    CHECK(back.resolve(e) == dir.path() / e.path);
    CHECK_THROWS_AS(back.at("lineorder", "nope"), NotFoundError);
  }
  SUBCASE("bad codec names the line") {
    const std::string text = std::string(kCatalogHeader) +
                             "\n# comment\nt\tc\tu32\tzstd\tt.c.pcf\t16384\t1\t100\t4\n";
    try {
      Catalog::parse(text, dir.path());
      FAIL("expected FormatError");
    } catch (const FormatError& err) {
      CHECK(std::string(err.what()).find("line 3") != std::string::npos);
      CHECK(std::string(err.what()).find("zstd") != std::string::npos);
    }
  }
  SUBCASE("other malformed inputs") {
    const std::string h = std::string(kCatalogHeader) + "\n";
    CHECK_THROWS_AS(Catalog::parse("", dir.path()), FormatError);
    CHECK_THROWS_AS(Catalog::parse("# other header\n", dir.path()), FormatError);
    CHECK_THROWS_AS(Catalog::parse(h + "t\tc\tu32\traw\tp\t1\t1\t1\n", dir.path()), FormatError);
    CHECK_THROWS_AS(Catalog::parse(h + "t\tc\tu32\traw\tp\t1\t1\t1\t4\tx\n", dir.path()),
                    FormatError);
    CHECK_THROWS_AS(Catalog::parse(h + "t\tc\tu64\traw\tp\t1\t1\t1\t4\n", dir.path()),
                    FormatError);
    CHECK_THROWS_AS(Catalog::parse(h + "t\tc\tu32\traw\tp\t1x\t1\t1\t4\n", dir.path()),
                    FormatError);
    CHECK_THROWS_AS(Catalog::parse(h + "t\tc\tu32\traw\tp\t-1\t1\t1\t4\n", dir.path()),
                    FormatError);
    CHECK_THROWS_AS(Catalog::parse(h + "t\tc\tu32\traw\tp\t1\t1\t1\t4\nt\tc\tu32\traw\tp\t1\t1\t1\t4\n",
                                   dir.path()),
                    FormatError);
  }
}

namespace {

// Builds a dataset directory with one u32 column and returns its catalog.
Catalog single_column(const std::filesystem::path& dir, const std::vector<std::uint32_t>& v,
                      std::uint32_t page_size = kDefaultPageSize) {
  Catalog c(dir);
  const auto name = column_file_name("t", "c", CodecId::Raw);
  c.upsert(named(write_column(v, CodecId::Raw, page_size, dir / name), "t", "c", name));
  c.save(dir / kCatalogFileName);
  return c;
}

}  // namespace

TEST_CASE("compress_existing_column") {
  testing::TempDir dir;
  const auto catalog_file = dir.path() / kCatalogFileName;

  SUBCASE("zeros under brotli keep contents") {
    const std::vector<std::uint32_t> zeros(16384, 0);
    auto c = single_column(dir.path(), zeros);
    const auto r = compress_existing_column(c, catalog_file, "t", "c", CodecId::Brotli);
    CHECK(r.entry.codec == CodecId::Brotli);
    CHECK(r.entry.total_values == 16384);
    CHECK(r.entry.compressed_file_size < 65536);
    CHECK(r.wall_seconds >= r.codec_seconds);
    const auto reloaded = Catalog::load(catalog_file);
    CHECK(reloaded.at("t", "c") == r.entry);
    CHECK(ColumnFile::open(reloaded.resolve(r.entry)).read_all_values() == zeros);
    CHECK_FALSE(std::filesystem::exists(dir.path() / "t.c.pcf"));
  }

  SUBCASE("a million zipf values shrink under fastpfor") {
    const auto v = testing::generate(testing::Distribution::Zipf, 1'000'000, 3);
    auto c = single_column(dir.path(), v);
    const auto r = compress_existing_column(c, catalog_file, "t", "c", CodecId::FastPFor128);
    CHECK(r.entry.compressed_file_size < 4'000'000);
    CHECK(ColumnFile::open(c.resolve(r.entry)).read_all_values() == v);
  }

  SUBCASE("transcoding between codecs preserves values") {
    const auto v = testing::generate(testing::Distribution::UniformWidths, 40000, 9);
    auto c = single_column(dir.path(), v, 4096);
    for (CodecId codec : {CodecId::PFor, CodecId::VByte, CodecId::PFor, CodecId::Raw}) {
      const auto r = compress_existing_column(c, catalog_file, "t", "c", codec);
      CHECK(r.entry.values_per_page == 1024);
      CHECK(ColumnFile::open(c.resolve(r.entry)).read_all_values() == v);
    }
    CHECK(std::distance(std::filesystem::directory_iterator(dir.path()),
                        std::filesystem::directory_iterator{}) == 2);
  }

  SUBCASE("string column rejects a non-raw codec") {
    Catalog c(dir.path());
    const std::vector<std::string> s = {"a", "bb"};
    c.upsert(named(write_string_column(s, 4096, dir.path() / "t.s.pcf"), "t", "s", "t.s.pcf"));
    CHECK_THROWS_AS(compress_existing_column(c, catalog_file, "t", "s", CodecId::PFor), TypeError);
  }

  SUBCASE("unknown column") {
    Catalog c(dir.path());
    CHECK_THROWS_AS(compress_existing_column(c, catalog_file, "t", "zz", CodecId::PFor),
                    NotFoundError);
  }
}

TEST_CASE("column_stats") {
  SUBCASE("single raw column of 100 values has ratio 1") {
    testing::TempDir dir;
    std::vector<std::uint32_t> v(100);
    std::iota(v.begin(), v.end(), 1u);
    const auto c = single_column(dir.path(), v);
    const auto stats = column_stats(c);
    REQUIRE(stats.size() == 3);
    CHECK(stats[0].column == "c");
    CHECK(stats[0].ratio() == 1.0);
    CHECK(stats[0].uncompressed_bytes == 400);
  }
  SUBCASE("aggregate rows sum their columns") {
    Catalog c;
    // payload = file size - (24 + 16 * pages); one page each.
    c.upsert({"t", "a", ValueType::U32, CodecId::PFor, "a", 16384, 100, 40 + 100, 400});
    c.upsert({"t", "b", ValueType::U32, CodecId::PFor, "b", 16384, 150, 40 + 300, 600});
    c.upsert({"t", "s", ValueType::Bytes, CodecId::Raw, "s", 100, 10, 40 + 50, 50});
    const auto stats = column_stats(c);
    REQUIRE(stats.size() == 5);
    CHECK(stats[3].column == kOverColumns);
    CHECK(stats[3].compressed_bytes == 400);
    CHECK(stats[3].uncompressed_bytes == 1000);
    CHECK(stats[3].codec == CodecId::PFor);
    CHECK(stats[4].column == kOverTable);
    CHECK(stats[4].compressed_bytes == 450);
    CHECK(stats[4].uncompressed_bytes == 1050);
    CHECK_FALSE(stats[4].codec.has_value());

    const auto only_a = column_stats(c, {{"t", "a"}});
    CHECK(only_a[3].compressed_bytes == 100);
  }
}
