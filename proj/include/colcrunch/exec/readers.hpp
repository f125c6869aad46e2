#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "colcrunch/exec/join_index.hpp"

namespace colcrunch::exec {

/// Values of one column for a run of rows.
using ValueVector = std::variant<std::vector<std::uint32_t>, std::vector<std::string>>;

/// Reads one attribute through the buffer pool. Pins never outlive a call.
class ColumnReader {
 public:
  ColumnReader(Database& db, ColumnId column, std::shared_ptr<buffer::QueryAccount> account);

  ColumnId column() const { return column_; }
  TableId table() const { return info_->table; }
  storage::ValueType type() const { return info_->type; }

  /// values[i] = column value at positions[i]. A forced access method must
  /// fit the positions (ContractError otherwise).
  void read(std::span<const Position> positions, ValueVector& out,
            std::optional<AccessMethod> force = std::nullopt);
  void read(const JoinIndexBlock& block, ValueVector& out,
            std::optional<AccessMethod> force = std::nullopt) {
    read(block.positions_of(info_->table), out, force);
  }

  std::vector<std::uint32_t> read_u32(std::span<const Position> positions,
                                      std::optional<AccessMethod> force = std::nullopt);

 private:
  // Positions must be non-decreasing; value i lands at ranks[i] (or i).
  void read_ascending(std::span<const Position> positions, ValueVector& out,
                      std::span<const std::size_t> ranks);

  Database* db_;
  ColumnId column_;
  const ColumnInfo* info_;
  std::shared_ptr<buffer::QueryAccount> account_;
};

/// Several column readers driven together; returns one aligned vector per reader.
class SyncReader {
 public:
  SyncReader(Database& db, const std::vector<ColumnId>& columns,
             std::shared_ptr<buffer::QueryAccount> account);

  std::size_t width() const { return readers_.size(); }
  const ColumnReader& reader(std::size_t i) const { return readers_[i]; }
  void read(const JoinIndexBlock& block, std::vector<ValueVector>& out);

 private:
  std::vector<ColumnReader> readers_;
};

}  // namespace colcrunch::exec
