#include "colcrunch/exec/readers.hpp"

#include <algorithm>
#include <numeric>

#include "colcrunch/error.hpp"

namespace colcrunch::exec {

std::size_t JoinIndexBlock::slot_of(TableId t) const {
  const auto it = std::find(tables.begin(), tables.end(), t);
  if (it == tables.end()) {
    throw ContractError("table " + std::to_string(t) + " is not in the join index");
  }
  return static_cast<std::size_t>(it - tables.begin());
}

void JoinIndexBlock::check(const Database& db) const {
  if (positions.size() != tables.size()) throw ContractError("join index arity mismatch");
  for (std::size_t k = 0; k < tables.size(); ++k) {
    if (positions[k].size() != rows()) throw ContractError("ragged join index");
    const auto n = db.row_count(tables[k]);
    for (Position p : positions[k]) {
      if (p >= n) {
        throw ContractError("position " + std::to_string(p) + " past the end of " +
                            db.table_name(tables[k]));
      }
    }
  }
}

std::string_view access_method_name(AccessMethod m) {
  switch (m) {
    case AccessMethod::Range: return "range";
    case AccessMethod::Sorted: return "sorted";
    case AccessMethod::Jive: return "jive";
  }
  return "?";
}

AccessMethod select_access_method(std::span<const Position> positions) {
  if (positions.empty()) throw ContractError("access method of an empty position list");
  bool contiguous = true;
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (positions[i] <= positions[i - 1]) return AccessMethod::Jive;
    if (positions[i] != positions[i - 1] + 1) contiguous = false;
  }
  return contiguous ? AccessMethod::Range : AccessMethod::Sorted;
}

ColumnReader::ColumnReader(Database& db, ColumnId column,
                           std::shared_ptr<buffer::QueryAccount> account)
    : db_(&db), column_(column), info_(&db.column(column)), account_(std::move(account)) {}

void ColumnReader::read(std::span<const Position> positions, ValueVector& out,
                        std::optional<AccessMethod> force) {
  const bool strings = info_->type == storage::ValueType::Bytes;
  if (strings) {
    if (!std::holds_alternative<std::vector<std::string>>(out)) out = std::vector<std::string>{};
    std::get<std::vector<std::string>>(out).resize(positions.size());
  } else {
    if (!std::holds_alternative<std::vector<std::uint32_t>>(out)) {
      out = std::vector<std::uint32_t>{};
    }
    std::get<std::vector<std::uint32_t>>(out).resize(positions.size());
  }
  if (positions.empty()) return;

  const AccessMethod natural = select_access_method(positions);
  const AccessMethod method = force.value_or(natural);
  if (method == AccessMethod::Range && natural != AccessMethod::Range) {
    throw ContractError("range access requires a contiguous ascending run");
  }
  if (method == AccessMethod::Sorted && natural == AccessMethod::Jive) {
    throw ContractError("sorted access requires strictly ascending positions");
  }

  if (method != AccessMethod::Jive) {
    read_ascending(positions, out, {});
    return;
  }
  // Jive: visit pages in ascending order, then scatter back to request order.
  std::vector<std::size_t> ranks(positions.size());
  std::iota(ranks.begin(), ranks.end(), std::size_t{0});
  std::stable_sort(ranks.begin(), ranks.end(),
                   [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  std::vector<Position> sorted(positions.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) sorted[i] = positions[ranks[i]];
  read_ascending(sorted, out, ranks);
}

void ColumnReader::read_ascending(std::span<const Position> positions, ValueVector& out,
                                  std::span<const std::size_t> ranks) {
  const std::uint64_t rows = db_->row_count(info_->table);
  const std::uint32_t vpp = info_->values_per_page;
  auto dst = [&](std::size_t i) { return ranks.empty() ? i : ranks[i]; };
  std::size_t i = 0;
  while (i < positions.size()) {
    if (positions[i] >= rows) {
      throw ContractError("position " + std::to_string(positions[i]) + " past the end of " +
                          db_->table_name(info_->table) + "." + info_->name);
    }
    const std::uint32_t page = positions[i] / vpp;
    const std::uint64_t first = std::uint64_t{page} * vpp;
    const std::uint64_t end = first + vpp;
    auto block = db_->buffer().fetch({column_, page}, account_);
    if (info_->type == storage::ValueType::U32) {
      auto& values = std::get<std::vector<std::uint32_t>>(out);
      const auto page_values = block.values();
      for (; i < positions.size() && positions[i] < end; ++i) {
        if (positions[i] >= rows) break;
        values[dst(i)] = page_values[positions[i] - first];
      }
    } else {
      auto& values = std::get<std::vector<std::string>>(out);
      const auto view = block.strings();
      for (; i < positions.size() && positions[i] < end; ++i) {
        if (positions[i] >= rows) break;
        values[dst(i)] = view.at(static_cast<std::uint32_t>(positions[i] - first));
      }
    }
  }
}

std::vector<std::uint32_t> ColumnReader::read_u32(std::span<const Position> positions,
                                                  std::optional<AccessMethod> force) {
  if (info_->type != storage::ValueType::U32) {
    throw TypeError(info_->name + " is not a u32 column");
  }
  ValueVector v = std::vector<std::uint32_t>{};
  read(positions, v, force);
  return std::move(std::get<std::vector<std::uint32_t>>(v));
}

SyncReader::SyncReader(Database& db, const std::vector<ColumnId>& columns,
                       std::shared_ptr<buffer::QueryAccount> account) {
  readers_.reserve(columns.size());
  for (ColumnId c : columns) readers_.emplace_back(db, c, account);
}

void SyncReader::read(const JoinIndexBlock& block, std::vector<ValueVector>& out) {
  out.resize(readers_.size());
  for (std::size_t i = 0; i < readers_.size(); ++i) readers_[i].read(block, out[i]);
}

}  // namespace colcrunch::exec
