#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "colcrunch/exec/readers.hpp"

namespace colcrunch::exec {

// ------------------------------------------------------------ position side

/// Pull-based stream of join index blocks. Blocks are never empty.
class PositionOperator {
 public:
  virtual ~PositionOperator() = default;
  virtual std::optional<JoinIndexBlock> next() = 0;
  virtual std::vector<TableId> tables() const = 0;
};

using PositionOperatorPtr = std::unique_ptr<PositionOperator>;

/// Dense ascending positions 0..N-1 of one table in blocks of kBlockRows.
/// Keeps `prefetch_window` pages ahead of the cursor queued for `prefetch`.
class DataSource final : public PositionOperator {
 public:
  DataSource(Database& db, TableId table, std::vector<ColumnId> prefetch,
             std::shared_ptr<buffer::QueryAccount> account, std::size_t block_rows = kBlockRows);
  std::optional<JoinIndexBlock> next() override;
  std::vector<TableId> tables() const override { return {table_}; }

 private:
  void issue_prefetch(std::uint64_t from_row);

  Database* db_;
  TableId table_;
  std::vector<ColumnId> prefetch_;
  std::vector<std::uint32_t> prefetched_until_;
  std::shared_ptr<buffer::QueryAccount> account_;
  std::size_t block_rows_;
  std::uint64_t cursor_ = 0;
  std::uint64_t rows_;
};

enum class CompareOp { Eq, Lt, Le, Gt, Ge, Between, InSet };

using Literal = std::variant<std::uint32_t, std::string>;

struct Condition {
  ColumnId column;
  CompareOp op;
  /// One operand, two for Between (inclusive), any number for InSet.
  std::vector<Literal> operands;
};

/// Keeps rows satisfying every condition, in input order. Conditions are
/// evaluated one after another over the surviving rows only.
class Filter final : public PositionOperator {
 public:
  Filter(Database& db, PositionOperatorPtr input, std::vector<Condition> conditions,
         std::shared_ptr<buffer::QueryAccount> account);
  std::optional<JoinIndexBlock> next() override;
  std::vector<TableId> tables() const override { return input_->tables(); }

 private:
  Database* db_;
  PositionOperatorPtr input_;
  std::vector<Condition> conditions_;
  std::vector<ColumnReader> readers_;
};

/// Inner equi-join. The right input is the build side; output rows are
/// left positions followed by right positions.
class HashJoin final : public PositionOperator {
 public:
  static constexpr std::size_t kDefaultMaxBuildRows = std::size_t{1} << 26;

  HashJoin(Database& db, PositionOperatorPtr left, PositionOperatorPtr right, ColumnId left_key,
           ColumnId right_key, std::shared_ptr<buffer::QueryAccount> account,
           std::size_t max_build_rows = kDefaultMaxBuildRows);
  std::optional<JoinIndexBlock> next() override;
  std::vector<TableId> tables() const override { return tables_; }

 private:
  static constexpr std::uint32_t kNone = UINT32_MAX;

  void build();
  template <typename Key>
  void probe(const std::vector<Key>& keys, const JoinIndexBlock& left,
             const std::unordered_map<Key, std::uint32_t>& heads);

  Database* db_;
  PositionOperatorPtr left_;
  PositionOperatorPtr right_;
  ColumnReader left_reader_;
  ColumnReader right_reader_;
  std::size_t max_build_rows_;
  std::vector<TableId> tables_;
  std::size_t left_width_ = 0;
  std::size_t right_width_ = 0;

  bool built_ = false;
  std::vector<Position> build_rows_;  // right_width_ positions per build row
  std::vector<std::uint32_t> chain_;  // next build row with the same key
  std::unordered_map<std::uint32_t, std::uint32_t> heads_u32_;
  std::unordered_map<std::string, std::uint32_t> heads_str_;
  std::deque<JoinIndexBlock> pending_;
  JoinIndexBlock out_;
};

// --------------------------------------------------------------- tuple side

using Value = std::variant<std::int64_t, std::string>;
using Tuple = std::vector<Value>;

struct TupleSet {
  std::vector<std::string> column_names;
  std::vector<Tuple> rows;

  /// Header line plus one line per row, tab-separated, LF-terminated.
  std::string to_tsv() const;
  bool operator==(const TupleSet&) const = default;
};

/// FNV-1a 64 of the TSV rendering, as 16 lowercase hex digits.
std::string result_checksum(const TupleSet& t);

enum class AggregateKind { Column, Product, Difference, ProductOfDifference };

/// SUM over one of: a, a*b, a-b, a*(b-c).
struct AggregateExpr {
  AggregateKind kind = AggregateKind::Column;
  std::vector<ColumnId> columns;
  std::string name;
};

/// The materialization point: groups rows by the group columns and sums the
/// aggregates with checked 64-bit arithmetic. Grouped aggregation over no
/// rows yields no rows; ungrouped aggregation yields a single zero row.
TupleSet aggregate_materialize(Database& db, PositionOperator& input,
                               const std::vector<ColumnId>& group_by,
                               const std::vector<std::string>& group_names,
                               const std::vector<AggregateExpr>& aggregates,
                               std::shared_ptr<buffer::QueryAccount> account);

struct SortKey {
  std::size_t column = 0;
  bool descending = false;
};

/// Stable sort by `keys`; remaining ties fall back to the whole tuple in
/// ascending order, so the output order is total.
void sort_limit(TupleSet& tuples, const std::vector<SortKey>& keys,
                std::optional<std::size_t> limit = std::nullopt);

}  // namespace colcrunch::exec
