#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "colcrunch/exec/database.hpp"
#include "colcrunch/storage/operations.hpp"

namespace colcrunch::testing {

struct MiniTable {
  std::string name;
  std::vector<std::pair<std::string, storage::ColumnData>> columns;
};

/// Writes the tables into `dir` (u32 columns with `codec`) and opens them.
inline std::unique_ptr<exec::Database> make_db(const std::filesystem::path& dir,
                                               const std::vector<MiniTable>& tables,
                                               buffer::BufferConfig config = {64, 1, 2},
                                               std::uint32_t page_size = 4096,
                                               codecs::CodecId codec = codecs::CodecId::Raw) {
  storage::Catalog catalog(dir);
  for (const auto& t : tables) {
    for (const auto& [name, data] : t.columns) {
      const bool strings = std::holds_alternative<std::vector<std::string>>(data);
      storage::add_column(catalog, t.name, name, data, strings ? codecs::CodecId::Raw : codec,
                          page_size);
    }
  }
  catalog.save(dir / storage::kCatalogFileName);
  return exec::Database::open(dir, config);
}

}  // namespace colcrunch::testing
