#pragma once

// Declarative query plans. Column references are by name and resolved
// against a Database when the plan is instantiated.
//
//   SortLimit                       <- tuple operators
//     AggregateMaterialize          <- the single materialization point
//       HashJoin / Filter / DataSource  <- position operators

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "colcrunch/exec/operators.hpp"

namespace colcrunch::exec {

struct ColumnRef {
  std::string table;
  std::string column;
  bool operator==(const ColumnRef&) const = default;
};

struct ConditionSpec {
  ColumnRef column;
  CompareOp op = CompareOp::Eq;
  std::vector<Literal> operands;
};

struct AggregateSpec {
  AggregateKind kind = AggregateKind::Column;
  std::vector<ColumnRef> columns;
  std::string name;
};

struct DataSourceParams {
  std::string table;
  std::vector<ColumnRef> prefetch;
};
struct FilterParams {
  std::vector<ConditionSpec> conditions;
};
struct HashJoinParams {
  ColumnRef left_key;
  ColumnRef right_key;
};
struct AggregateParams {
  std::vector<ColumnRef> group_by;
  std::vector<std::string> group_names;
  std::vector<AggregateSpec> aggregates;
};
struct SortLimitParams {
  std::vector<SortKey> keys;
  std::optional<std::size_t> limit;
};

enum class OpKind { DataSource, Filter, HashJoin, AggregateMaterialize, SortLimit };

struct PlanNode {
  OpKind kind = OpKind::DataSource;
  std::variant<DataSourceParams, FilterParams, HashJoinParams, AggregateParams, SortLimitParams>
      params;
  std::vector<PlanNode> children;
};

PlanNode data_source(std::string table);
PlanNode filter(PlanNode input, std::vector<ConditionSpec> conditions);
/// `build` is the right (build) side.
PlanNode hash_join(PlanNode probe, PlanNode build, ColumnRef probe_key, ColumnRef build_key);
PlanNode aggregate(PlanNode input, AggregateParams params);
PlanNode sort_limit(PlanNode input, std::vector<SortKey> keys,
                    std::optional<std::size_t> limit = std::nullopt);

/// Fills each DataSource's prefetch list with the columns of its table that
/// the plan reads anywhere.
void declare_prefetch_columns(PlanNode& root);

/// Enforces operator arity, parameter kinds and exactly one
/// AggregateMaterialize on every root-to-leaf path, with only position
/// operators below it and only SortLimit above. Throws ContractError.
void validate_plan(const PlanNode& root);

/// Runs the plan on the calling thread.
TupleSet execute_plan(const PlanNode& root, Database& db,
                      std::shared_ptr<buffer::QueryAccount> account = nullptr);

}  // namespace colcrunch::exec
