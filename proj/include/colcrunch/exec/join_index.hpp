#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "colcrunch/exec/database.hpp"

namespace colcrunch::exec {

inline constexpr std::size_t kBlockRows = 4096;

/// Generalized join index: for each row, one 0-based position per listed
/// table. Stored column-major: positions[k][row] belongs to tables[k].
struct JoinIndexBlock {
  std::vector<TableId> tables;
  std::vector<std::vector<Position>> positions;

  std::size_t rows() const { return positions.empty() ? 0 : positions.front().size(); }
  /// Index of `t` in the table list; throws ContractError when absent.
  std::size_t slot_of(TableId t) const;
  std::span<const Position> positions_of(TableId t) const { return positions[slot_of(t)]; }

  /// Throws ContractError on ragged rows or positions past a table's end.
  void check(const Database& db) const;
};

enum class AccessMethod { Range, Sorted, Jive };

std::string_view access_method_name(AccessMethod m);

/// Range for a contiguous ascending run, Sorted for strictly ascending with
/// gaps, Jive otherwise. `positions` must be non-empty.
AccessMethod select_access_method(std::span<const Position> positions);

}  // namespace colcrunch::exec
