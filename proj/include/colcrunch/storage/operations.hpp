#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "colcrunch/codecs/codec.hpp"
#include "colcrunch/storage/catalog.hpp"

namespace colcrunch::storage {

/// File name of a column within a dataset directory.
std::string column_file_name(std::string_view table, std::string_view column,
                             codecs::CodecId codec);

using ColumnData = std::variant<std::vector<std::uint32_t>, std::vector<std::string>>;

/// Writes a column into the catalog's directory and records it. String data
/// must use CodecId::Raw (TypeError otherwise). Does not save the catalog.
const CatalogEntry& add_column(Catalog& catalog, std::string_view table, std::string_view column,
                               const ColumnData& data, codecs::CodecId codec,
                               std::uint32_t page_size_bytes);

struct CompressionReport {
  CatalogEntry entry;
  double wall_seconds = 0;   // read + encode + write + catalog swap
  double codec_seconds = 0;  // time inside compress_values only
};

/// Rewrites one column with `codec` and swaps the catalog entry in place.
/// The catalog is saved (atomically) to `catalog_file`; the superseded
/// column file is removed afterwards. Any source codec is accepted.
CompressionReport compress_existing_column(Catalog& catalog,
                                           const std::filesystem::path& catalog_file,
                                           std::string_view table, std::string_view column,
                                           codecs::CodecId codec,
                                           std::uint32_t page_size_bytes = 0);

struct ColumnStat {
  std::string table;
  std::string column;  // aggregate rows use kOverColumns / kOverTable
  std::optional<codecs::CodecId> codec;  // empty on aggregate rows with mixed codecs
  std::uint64_t compressed_bytes = 0;
  std::uint64_t uncompressed_bytes = 0;
  double ratio() const {
    return compressed_bytes == 0 ? 0.0
                                 : static_cast<double>(uncompressed_bytes) /
                                       static_cast<double>(compressed_bytes);
  }
};

inline constexpr std::string_view kOverColumns = "(over columns)";
inline constexpr std::string_view kOverTable = "(over the whole table)";

/// Sizes count page bodies only, so a Raw u32 column has ratio exactly 1.
/// `tracked` selects the "over columns" set as (table, column) pairs; when
/// empty, every u32 column is tracked. Aggregate rows are emitted after each
/// table that has at least one tracked column.
std::vector<ColumnStat> column_stats(
    const Catalog& catalog,
    const std::set<std::pair<std::string, std::string>>& tracked = {});

}  // namespace colcrunch::storage
