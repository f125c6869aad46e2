#pragma once

// Catalog of column physical parameters, stored as tab-separated text:
//
//   # colcrunch catalog v1
//   # table  column  type  codec  path  values_per_page  total_values  compressed_file_size  uncompressed_size
//   lineorder  lo_quantity  u32  raw  lineorder.lo_quantity.pcf  16384  600000  2400600  2400000
//
// The first line is mandatory; other lines starting with '#' are comments.
// Paths are relative to the directory holding the catalog file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "colcrunch/codecs/codec.hpp"

namespace colcrunch::storage {

enum class ValueType : std::uint8_t { U32 = 0, Bytes = 1 };

std::string_view value_type_name(ValueType t);
std::optional<ValueType> parse_value_type(std::string_view name);

struct CatalogEntry {
  std::string table;
  std::string column;
  ValueType type = ValueType::U32;
  codecs::CodecId codec = codecs::CodecId::Raw;
  std::string path;
  std::uint32_t values_per_page = 0;
  std::uint64_t total_values = 0;
  std::uint64_t compressed_file_size = 0;
  std::uint64_t uncompressed_size = 0;

  std::uint64_t total_pages() const;
  /// Page bodies only: file size minus header and page index.
  std::uint64_t payload_bytes() const;

  bool operator==(const CatalogEntry&) const = default;
};

inline constexpr std::string_view kCatalogFileName = "catalog.txt";
inline constexpr std::string_view kCatalogHeader = "# colcrunch catalog v1";

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

  /// Throws FormatError naming the offending line.
  static Catalog load(const std::filesystem::path& file);
  static Catalog parse(std::string_view text, std::filesystem::path base_dir);

  /// Writes a temp file, fsyncs it and renames it over `file`.
  void save(const std::filesystem::path& file) const;
  std::string serialize() const;

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const CatalogEntry* find(std::string_view table, std::string_view column) const;
  /// Throws NotFoundError.
  const CatalogEntry& at(std::string_view table, std::string_view column) const;
  /// Replaces the entry with the same (table, column) or appends.
  void upsert(CatalogEntry entry);

  std::vector<std::string> tables() const;
  std::vector<const CatalogEntry*> columns_of(std::string_view table) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::filesystem::path resolve(const CatalogEntry& entry) const;

 private:
  std::filesystem::path base_dir_;
  std::vector<CatalogEntry> entries_;
};

/// Writes `content` to a sibling temp file, fsyncs and renames it into place.
void write_file_atomically(const std::filesystem::path& file, std::string_view content);

}  // namespace colcrunch::storage
