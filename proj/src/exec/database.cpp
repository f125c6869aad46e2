#include "colcrunch/exec/database.hpp"

#include <algorithm>

#include "colcrunch/error.hpp"

namespace colcrunch::exec {

namespace {

std::string column_key(std::string_view table, std::string_view column) {
  std::string k(table);
  k += '\t';
  k += column;
  return k;
}

}  // namespace

Database::Database(storage::Catalog catalog, buffer::BufferConfig config)
    : catalog_(std::move(catalog)) {
  std::vector<std::shared_ptr<const storage::ColumnFile>> files;
  std::uint32_t slot_bytes = 4;
  for (const auto& e : catalog_.entries()) {
    auto file = std::make_shared<const storage::ColumnFile>(
        storage::ColumnFile::open(catalog_.resolve(e)));
    const auto& h = file->header();
    if (h.total_values != e.total_values || h.codec != e.codec || h.value_type != e.type) {
      throw FormatError(file->path().string() + " disagrees with its catalog entry");
    }
    auto t = std::find(tables_.begin(), tables_.end(), e.table);
    TableId tid = static_cast<TableId>(t - tables_.begin());
    if (t == tables_.end()) {
      tables_.push_back(e.table);
      row_counts_.push_back(e.total_values);
    } else if (row_counts_[tid] != e.total_values) {
      throw FormatError("table " + e.table + " has columns of different lengths");
    }
    if (h.value_type == storage::ValueType::U32) {
      slot_bytes = std::max(slot_bytes, h.values_per_page * 4);
    } else {
      for (const auto& pe : file->page_index()) {
        slot_bytes = std::max(slot_bytes, (pe.compressed_len + 3) / 4 * 4);
      }
    }
    const auto cid = static_cast<ColumnId>(columns_.size());
    columns_.push_back({tid, e.column, h.value_type, h.codec, h.values_per_page, h.total_pages});
    column_index_.emplace(column_key(e.table, e.column), cid);
    files.push_back(std::move(file));
  }
  buffer_ = std::make_unique<buffer::BufferManager>(std::move(files), config, slot_bytes);
}

std::unique_ptr<Database> Database::open(const std::filesystem::path& dir,
                                         buffer::BufferConfig config) {
  const auto catalog_file = dir / storage::kCatalogFileName;
  if (!std::filesystem::exists(catalog_file)) {
    throw IoError("no dataset at " + dir.string() + " (missing " +
                  std::string(storage::kCatalogFileName) + ")");
  }
  return std::make_unique<Database>(storage::Catalog::load(catalog_file), config);
}

TableId Database::table_id(std::string_view table) const {
  const auto t = std::find(tables_.begin(), tables_.end(), table);
  if (t == tables_.end()) throw NotFoundError("unknown table " + std::string(table));
  return static_cast<TableId>(t - tables_.begin());
}

ColumnId Database::column_id(std::string_view table, std::string_view column) const {
  const auto it = column_index_.find(column_key(table, column));
  if (it == column_index_.end()) {
    throw NotFoundError("unknown column " + std::string(table) + "." + std::string(column));
  }
  return it->second;
}

std::vector<ColumnId> Database::columns_of(TableId t) const {
  std::vector<ColumnId> out;
  for (ColumnId c = 0; c < columns_.size(); ++c) {
    if (columns_[c].table == t) out.push_back(c);
  }
  return out;
}

}  // namespace colcrunch::exec
