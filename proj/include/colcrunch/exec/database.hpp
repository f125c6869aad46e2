#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "colcrunch/buffer/buffer_manager.hpp"
#include "colcrunch/storage/catalog.hpp"

namespace colcrunch::exec {

using TableId = std::uint32_t;
using Position = std::uint32_t;
using buffer::ColumnId;

struct ColumnInfo {
  TableId table = 0;
  std::string name;
  storage::ValueType type = storage::ValueType::U32;
  codecs::CodecId codec = codecs::CodecId::Raw;
  std::uint32_t values_per_page = 0;
  std::uint32_t total_pages = 0;
};

/// An opened dataset: catalog, column files and the shared buffer pool.
/// Safe to share across query threads.
class Database {
 public:
  Database(storage::Catalog catalog, buffer::BufferConfig config);

  /// Loads <dir>/catalog.txt.
  static std::unique_ptr<Database> open(const std::filesystem::path& dir,
                                        buffer::BufferConfig config);

  const storage::Catalog& catalog() const { return catalog_; }
  buffer::BufferManager& buffer() { return *buffer_; }

  /// Throws NotFoundError.
  TableId table_id(std::string_view table) const;
  const std::string& table_name(TableId t) const { return tables_.at(t); }
  std::size_t table_count() const { return tables_.size(); }
  std::uint64_t row_count(TableId t) const { return row_counts_.at(t); }

  /// Throws NotFoundError.
  ColumnId column_id(std::string_view table, std::string_view column) const;
  const ColumnInfo& column(ColumnId c) const { return columns_.at(c); }
  std::vector<ColumnId> columns_of(TableId t) const;

 private:
  storage::Catalog catalog_;
  std::vector<std::string> tables_;
  std::vector<std::uint64_t> row_counts_;
  std::vector<ColumnInfo> columns_;
  std::unordered_map<std::string, ColumnId> column_index_;  // "table\tcolumn"
  std::unique_ptr<buffer::BufferManager> buffer_;
};

}  // namespace colcrunch::exec
