#include "colcrunch/storage/operations.hpp"

#include <chrono>

#include "colcrunch/error.hpp"
#include "colcrunch/storage/column_file.hpp"

namespace colcrunch::storage {

std::string column_file_name(std::string_view table, std::string_view column,
                             codecs::CodecId codec) {
  std::string name = std::string(table) + "." + std::string(column);
  if (codec != codecs::CodecId::Raw) name += "." + std::string(codecs::codec_name(codec));
  return name + ".pcf";
}

const CatalogEntry& add_column(Catalog& catalog, std::string_view table, std::string_view column,
                               const ColumnData& data, codecs::CodecId codec,
                               std::uint32_t page_size_bytes) {
  CatalogEntry e;
  if (const auto* u = std::get_if<std::vector<std::uint32_t>>(&data)) {
    const auto name = column_file_name(table, column, codec);
    e = write_column(*u, codec, page_size_bytes, catalog.base_dir() / name);
    e.path = name;
  } else {
    if (codec != codecs::CodecId::Raw) {
      throw TypeError(std::string(table) + "." + std::string(column) +
                      " holds strings, which are stored raw only");
    }
    const auto name = column_file_name(table, column, codecs::CodecId::Raw);
    e = write_string_column(std::get<std::vector<std::string>>(data), page_size_bytes,
                            catalog.base_dir() / name);
    e.path = name;
  }
  e.table = std::string(table);
  e.column = std::string(column);
  catalog.upsert(e);
  return catalog.at(table, column);
}

CompressionReport compress_existing_column(Catalog& catalog,
                                           const std::filesystem::path& catalog_file,
                                           std::string_view table, std::string_view column,
                                           codecs::CodecId codec,
                                           std::uint32_t page_size_bytes) {
  const auto t0 = std::chrono::steady_clock::now();
  const CatalogEntry old = catalog.at(table, column);
  if (old.type != ValueType::U32) {
    if (codec != codecs::CodecId::Raw) {
      throw TypeError(old.table + "." + old.column + " is a " +
                      std::string(value_type_name(old.type)) + " column; only raw is allowed");
    }
    return {old, 0.0, 0.0};
  }
  if (page_size_bytes == 0) page_size_bytes = old.values_per_page * 4;

  const auto old_path = catalog.resolve(old);
  const auto values = ColumnFile::open(old_path).read_all_values();

  CatalogEntry fresh_relative = old;
  fresh_relative.path = column_file_name(table, column, codec);
  const auto new_path = catalog.resolve(fresh_relative);

  CompressionReport report;
  CatalogEntry written = write_column_timed(values, codec, page_size_bytes, new_path,
                                            report.codec_seconds);
  written.table = old.table;
  written.column = old.column;
  written.path = fresh_relative.path;
  catalog.upsert(written);
  catalog.save(catalog_file);

  std::error_code ec;
  if (!std::filesystem::equivalent(old_path, new_path, ec)) std::filesystem::remove(old_path, ec);

  report.entry = written;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<ColumnStat> column_stats(const Catalog& catalog,
                                     const std::set<std::pair<std::string, std::string>>& tracked) {
  std::vector<ColumnStat> out;
  for (const auto& table : catalog.tables()) {
    ColumnStat over_columns{table, std::string(kOverColumns), std::nullopt, 0, 0};
    ColumnStat over_table{table, std::string(kOverTable), std::nullopt, 0, 0};
    std::set<codecs::CodecId> tracked_codecs;
    std::set<codecs::CodecId> all_codecs;
    bool any_tracked = false;
    for (const CatalogEntry* e : catalog.columns_of(table)) {
      ColumnStat s{e->table, e->column, e->codec, e->payload_bytes(), e->uncompressed_size};
      out.push_back(s);
      const bool is_tracked = tracked.empty() ? e->type == ValueType::U32
                                              : tracked.count({e->table, e->column}) > 0;
      if (is_tracked) {
        any_tracked = true;
        over_columns.compressed_bytes += s.compressed_bytes;
        over_columns.uncompressed_bytes += s.uncompressed_bytes;
        tracked_codecs.insert(e->codec);
      }
      over_table.compressed_bytes += s.compressed_bytes;
      over_table.uncompressed_bytes += s.uncompressed_bytes;
      all_codecs.insert(e->codec);
    }
    if (!any_tracked) continue;
    if (tracked_codecs.size() == 1) over_columns.codec = *tracked_codecs.begin();
    if (all_codecs.size() == 1) over_table.codec = *all_codecs.begin();
    out.push_back(over_columns);
    out.push_back(over_table);
  }
  return out;
}

}  // namespace colcrunch::storage
