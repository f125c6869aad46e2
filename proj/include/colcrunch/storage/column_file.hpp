#pragma once

// On-disk column file ("PCF1").
//
//   offset 0   magic "PCF1"
//          4   format version (u8)
//          5   codec wire byte (u8)
//          6   value type (u8: 0 = u32, 1 = raw bytes)
//          7   reserved, zero
//          8   values_per_page (u32)
//         12   total_pages (u32)
//         16   total_values (u64)
//         24   PageIndex: total_pages entries of
//                { offset u64, compressed_len u32, value_count u32 }
//   then the page bodies, in page order, back to back.
//
// All integers are little-endian. Every page except possibly the last holds
// exactly values_per_page values; only the physical extent varies.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colcrunch/codecs/codec.hpp"
#include "colcrunch/storage/catalog.hpp"

namespace colcrunch::storage {

inline constexpr std::array<char, 4> kMagic = {'P', 'C', 'F', '1'};
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::size_t kIndexEntrySize = 16;
inline constexpr std::uint32_t kDefaultPageSize = 65536;

struct ColumnFileHeader {
  std::uint8_t format_version = kFormatVersion;
  codecs::CodecId codec = codecs::CodecId::Raw;
  ValueType value_type = ValueType::U32;
  std::uint32_t values_per_page = 0;
  std::uint32_t total_pages = 0;
  std::uint64_t total_values = 0;
};

struct PageIndexEntry {
  std::uint64_t offset = 0;
  std::uint32_t compressed_len = 0;
  std::uint32_t value_count = 0;
};

/// Bytes occupied by header and page index for a column of `pages` pages.
constexpr std::uint64_t metadata_size(std::uint64_t pages) {
  return kHeaderSize + kIndexEntrySize * pages;
}

/// Writes a u32 column. The returned entry has empty table/column names and
/// `path` set to the given path; sizes reflect the file on disk.
CatalogEntry write_column(std::span<const std::uint32_t> values, codecs::CodecId codec,
                          std::uint32_t page_size_bytes, const std::filesystem::path& path);

/// Same as write_column, also reporting time spent inside the codec.
CatalogEntry write_column_timed(std::span<const std::uint32_t> values, codecs::CodecId codec,
                                std::uint32_t page_size_bytes, const std::filesystem::path& path,
                                double& codec_seconds);

/// Writes a raw-bytes column. Each page body is a slot directory of
/// value_count + 1 u32 offsets followed by the concatenated strings; such
/// columns are never codec-compressed.
CatalogEntry write_string_column(std::span<const std::string> values,
                                 std::uint32_t page_size_bytes, const std::filesystem::path& path);

/// Read-only view of one string page body.
class StringPageView {
 public:
  StringPageView() = default;
  /// Validates the slot directory; throws FormatError on inconsistency.
  StringPageView(std::span<const std::uint8_t> body, std::uint32_t value_count);

  std::uint32_t size() const { return count_; }
  std::string_view at(std::uint32_t i) const;

 private:
  const std::uint8_t* body_ = nullptr;
  std::uint32_t count_ = 0;
};

/// An open, immutable column file. Move-only; the descriptor closes on
/// destruction. Reads are positional so one instance serves many threads.
class ColumnFile {
 public:
  static ColumnFile open(const std::filesystem::path& path);

  ColumnFile(ColumnFile&& other) noexcept;
  ColumnFile& operator=(ColumnFile&& other) noexcept;
  ColumnFile(const ColumnFile&) = delete;
  ColumnFile& operator=(const ColumnFile&) = delete;
  ~ColumnFile();

  const ColumnFileHeader& header() const { return header_; }
  const std::vector<PageIndexEntry>& page_index() const { return index_; }
  const std::filesystem::path& path() const { return path_; }
  std::uint64_t file_size() const { return file_size_; }

  /// Exactly the page's extent, read with one positional read.
  codecs::CompressedPayload read_page_bytes(std::uint32_t page_no) const;
  void read_page_into(std::uint32_t page_no, std::vector<std::uint8_t>& buffer) const;

  std::vector<std::uint32_t> read_all_values() const;
  std::vector<std::string> read_all_strings() const;

  /// Asks the kernel to drop cached pages of this file.
  bool drop_os_cache() const;

 private:
  ColumnFile() = default;
  void check_page(std::uint32_t page_no) const;

  int fd_ = -1;
  std::filesystem::path path_;
  std::uint64_t file_size_ = 0;
  ColumnFileHeader header_;
  std::vector<PageIndexEntry> index_;
};

}  // namespace colcrunch::storage
