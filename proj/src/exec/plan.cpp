#include "colcrunch/exec/plan.hpp"

#include <algorithm>

#include "colcrunch/error.hpp"

namespace colcrunch::exec {

PlanNode data_source(std::string table) {
  return {OpKind::DataSource, DataSourceParams{std::move(table), {}}, {}};
}

PlanNode filter(PlanNode input, std::vector<ConditionSpec> conditions) {
  PlanNode n{OpKind::Filter, FilterParams{std::move(conditions)}, {}};
  n.children.push_back(std::move(input));
  return n;
}

PlanNode hash_join(PlanNode probe, PlanNode build, ColumnRef probe_key, ColumnRef build_key) {
  PlanNode n{OpKind::HashJoin, HashJoinParams{std::move(probe_key), std::move(build_key)}, {}};
  n.children.push_back(std::move(probe));
  n.children.push_back(std::move(build));
  return n;
}

PlanNode aggregate(PlanNode input, AggregateParams params) {
  PlanNode n{OpKind::AggregateMaterialize, std::move(params), {}};
  n.children.push_back(std::move(input));
  return n;
}

PlanNode sort_limit(PlanNode input, std::vector<SortKey> keys, std::optional<std::size_t> limit) {
  PlanNode n{OpKind::SortLimit, SortLimitParams{std::move(keys), limit}, {}};
  n.children.push_back(std::move(input));
  return n;
}

namespace {

void collect_columns(const PlanNode& n, std::vector<ColumnRef>& out) {
  auto add = [&](const ColumnRef& c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  if (const auto* f = std::get_if<FilterParams>(&n.params)) {
    for (const auto& c : f->conditions) add(c.column);
  } else if (const auto* j = std::get_if<HashJoinParams>(&n.params)) {
    add(j->left_key);
    add(j->right_key);
  } else if (const auto* a = std::get_if<AggregateParams>(&n.params)) {
    for (const auto& g : a->group_by) add(g);
    for (const auto& s : a->aggregates) {
      for (const auto& c : s.columns) add(c);
    }
  }
  for (const auto& c : n.children) collect_columns(c, out);
}

void assign_prefetch(PlanNode& n, const std::vector<ColumnRef>& used) {
  if (auto* d = std::get_if<DataSourceParams>(&n.params)) {
    d->prefetch.clear();
    for (const auto& c : used) {
      if (c.table == d->table) d->prefetch.push_back(c);
    }
  }
  for (auto& c : n.children) assign_prefetch(c, used);
}

std::size_t expected_children(OpKind k) {
  switch (k) {
    case OpKind::DataSource: return 0;
    case OpKind::HashJoin: return 2;
    default: return 1;
  }
}

bool params_match(const PlanNode& n) {
  switch (n.kind) {
    case OpKind::DataSource: return std::holds_alternative<DataSourceParams>(n.params);
    case OpKind::Filter: return std::holds_alternative<FilterParams>(n.params);
    case OpKind::HashJoin: return std::holds_alternative<HashJoinParams>(n.params);
    case OpKind::AggregateMaterialize: return std::holds_alternative<AggregateParams>(n.params);
    case OpKind::SortLimit: return std::holds_alternative<SortLimitParams>(n.params);
  }
  return false;
}

// `below` is true once a materialization point has been passed on this path.
void validate_node(const PlanNode& n, bool below) {
  if (!params_match(n)) throw ContractError("plan node parameters do not match its kind");
  if (n.children.size() != expected_children(n.kind)) {
    throw ContractError("plan node has the wrong number of inputs");
  }
  switch (n.kind) {
    case OpKind::SortLimit:
      if (below) throw ContractError("tuple operator below the materialization point");
      break;
    case OpKind::AggregateMaterialize:
      if (below) throw ContractError("more than one materialization point on a plan path");
      below = true;
      break;
    default:
      if (!below) throw ContractError("position operator above the materialization point");
      break;
  }
  for (const auto& c : n.children) validate_node(c, below);
}

ColumnId resolve(const Database& db, const ColumnRef& c) { return db.column_id(c.table, c.column); }

PositionOperatorPtr instantiate(const PlanNode& n, Database& db,
                                const std::shared_ptr<buffer::QueryAccount>& account) {
  switch (n.kind) {
    case OpKind::DataSource: {
      const auto& p = std::get<DataSourceParams>(n.params);
      std::vector<ColumnId> prefetch;
      for (const auto& c : p.prefetch) prefetch.push_back(resolve(db, c));
      return std::make_unique<DataSource>(db, db.table_id(p.table), std::move(prefetch), account);
    }
    case OpKind::Filter: {
      const auto& p = std::get<FilterParams>(n.params);
      std::vector<Condition> conds;
      for (const auto& c : p.conditions) conds.push_back({resolve(db, c.column), c.op, c.operands});
      return std::make_unique<Filter>(db, instantiate(n.children[0], db, account), std::move(conds),
                                      account);
    }
    case OpKind::HashJoin: {
      const auto& p = std::get<HashJoinParams>(n.params);
      return std::make_unique<HashJoin>(db, instantiate(n.children[0], db, account),
                                        instantiate(n.children[1], db, account),
                                        resolve(db, p.left_key), resolve(db, p.right_key),
                                        account);
    }
    default:
      throw ContractError("not a position operator");
  }
}

TupleSet run_tuple_side(const PlanNode& n, Database& db,
                        const std::shared_ptr<buffer::QueryAccount>& account) {
  if (n.kind == OpKind::SortLimit) {
    const auto& p = std::get<SortLimitParams>(n.params);
    TupleSet t = run_tuple_side(n.children[0], db, account);
    sort_limit(t, p.keys, p.limit);
    return t;
  }
  const auto& p = std::get<AggregateParams>(n.params);
  auto input = instantiate(n.children[0], db, account);
  std::vector<ColumnId> group_by;
  for (const auto& g : p.group_by) group_by.push_back(resolve(db, g));
  std::vector<AggregateExpr> aggs;
  for (const auto& a : p.aggregates) {
    AggregateExpr e{a.kind, {}, a.name};
    for (const auto& c : a.columns) e.columns.push_back(resolve(db, c));
    aggs.push_back(std::move(e));
  }
  return aggregate_materialize(db, *input, group_by, p.group_names, aggs, account);
}

}  // namespace

void declare_prefetch_columns(PlanNode& root) {
  std::vector<ColumnRef> used;
  collect_columns(root, used);
  assign_prefetch(root, used);
}

void validate_plan(const PlanNode& root) { validate_node(root, false); }

TupleSet execute_plan(const PlanNode& root, Database& db,
                      std::shared_ptr<buffer::QueryAccount> account) {
  validate_plan(root);
  return run_tuple_side(root, db, account);
}

}  // namespace colcrunch::exec
