#include "colcrunch/exec/operators.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "colcrunch/error.hpp"

namespace colcrunch::exec {

namespace {

void require_table(const std::vector<TableId>& tables, TableId t, const Database& db,
                   const std::string& what) {
  if (std::find(tables.begin(), tables.end(), t) == tables.end()) {
    throw ContractError(what + " refers to table " + db.table_name(t) +
                        ", which is not part of its input");
  }
}

JoinIndexBlock empty_like(const std::vector<TableId>& tables) {
  JoinIndexBlock b;
  b.tables = tables;
  b.positions.resize(tables.size());
  return b;
}

template <typename T>
bool compare(const T& v, CompareOp op, const std::vector<T>& ops) {
  switch (op) {
    case CompareOp::Eq: return v == ops[0];
    case CompareOp::Lt: return v < ops[0];
    case CompareOp::Le: return v <= ops[0];
    case CompareOp::Gt: return v > ops[0];
    case CompareOp::Ge: return v >= ops[0];
    case CompareOp::Between: return ops[0] <= v && v <= ops[1];
    case CompareOp::InSet: return std::binary_search(ops.begin(), ops.end(), v);
  }
  return false;
}

template <typename T>
std::vector<T> typed_operands(const Condition& c) {
  std::vector<T> out;
  for (const auto& lit : c.operands) out.push_back(std::get<T>(lit));
  if (c.op == CompareOp::InSet) std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

// ------------------------------------------------------------------ DataSource

DataSource::DataSource(Database& db, TableId table, std::vector<ColumnId> prefetch,
                       std::shared_ptr<buffer::QueryAccount> account, std::size_t block_rows)
    : db_(&db),
      table_(table),
      prefetch_(std::move(prefetch)),
      prefetched_until_(prefetch_.size(), 0),
      account_(std::move(account)),
      block_rows_(block_rows),
      rows_(db.row_count(table)) {
  if (block_rows_ == 0) throw ContractError("block size must be positive");
  for (ColumnId c : prefetch_) {
    if (db.column(c).table != table_) {
      throw ContractError("prefetch column " + db.column(c).name + " is not in table " +
                          db.table_name(table_));
    }
  }
}

void DataSource::issue_prefetch(std::uint64_t from_row) {
  const std::uint32_t window = db_->buffer().config().prefetch_window;
  if (window == 0) return;
  std::vector<buffer::PageRef> refs;
  for (std::size_t i = 0; i < prefetch_.size(); ++i) {
    const ColumnInfo& info = db_->column(prefetch_[i]);
    const auto first = static_cast<std::uint32_t>(from_row / info.values_per_page);
    const std::uint32_t end = std::min<std::uint32_t>(info.total_pages, first + window);
    for (std::uint32_t p = std::max(first, prefetched_until_[i]); p < end; ++p) {
      refs.push_back({prefetch_[i], p});
    }
    prefetched_until_[i] = std::max(prefetched_until_[i], end);
  }
  if (!refs.empty()) db_->buffer().prefetch(refs, account_);
}

std::optional<JoinIndexBlock> DataSource::next() {
  if (cursor_ >= rows_) return std::nullopt;
  issue_prefetch(cursor_);
  const std::uint64_t n = std::min<std::uint64_t>(block_rows_, rows_ - cursor_);
  JoinIndexBlock b = empty_like({table_});
  b.positions[0].resize(n);
  for (std::uint64_t i = 0; i < n; ++i) b.positions[0][i] = static_cast<Position>(cursor_ + i);
  cursor_ += n;
  return b;
}

// ---------------------------------------------------------------------- Filter

Filter::Filter(Database& db, PositionOperatorPtr input, std::vector<Condition> conditions,
               std::shared_ptr<buffer::QueryAccount> account)
    : db_(&db), input_(std::move(input)), conditions_(std::move(conditions)) {
  const auto tables = input_->tables();
  for (const Condition& c : conditions_) {
    const ColumnInfo& info = db.column(c.column);
    require_table(tables, info.table, db, "filter on " + info.name);
    const std::size_t n = c.operands.size();
    const bool arity_ok = c.op == CompareOp::InSet ? true
                          : c.op == CompareOp::Between ? n == 2
                                                       : n == 1;
    if (!arity_ok) throw ContractError("wrong operand count in filter on " + info.name);
    const bool want_string = info.type == storage::ValueType::Bytes;
    for (const Literal& lit : c.operands) {
      if (std::holds_alternative<std::string>(lit) != want_string) {
        throw TypeError("filter on " + info.name + " compares a " +
                        std::string(storage::value_type_name(info.type)) +
                        " column with a literal of another type");
      }
    }
    readers_.emplace_back(db, c.column, account);
  }
}

std::optional<JoinIndexBlock> Filter::next() {
  while (auto in = input_->next()) {
    std::vector<std::size_t> alive(in->rows());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
    std::vector<Position> probe;
    ValueVector values;
    for (std::size_t k = 0; k < conditions_.size() && !alive.empty(); ++k) {
      const Condition& c = conditions_[k];
      const auto& src = in->positions[in->slot_of(readers_[k].table())];
      probe.resize(alive.size());
      for (std::size_t i = 0; i < alive.size(); ++i) probe[i] = src[alive[i]];
      readers_[k].read(probe, values);
      std::size_t kept = 0;
      if (auto* u = std::get_if<std::vector<std::uint32_t>>(&values)) {
        const auto ops = typed_operands<std::uint32_t>(c);
        for (std::size_t i = 0; i < alive.size(); ++i) {
          if (compare((*u)[i], c.op, ops)) alive[kept++] = alive[i];
        }
      } else {
        const auto& s = std::get<std::vector<std::string>>(values);
        const auto ops = typed_operands<std::string>(c);
        for (std::size_t i = 0; i < alive.size(); ++i) {
          if (compare(s[i], c.op, ops)) alive[kept++] = alive[i];
        }
      }
      alive.resize(kept);
    }
    if (alive.empty()) continue;
    if (alive.size() == in->rows()) return in;
    JoinIndexBlock out = empty_like(in->tables);
    for (std::size_t t = 0; t < out.tables.size(); ++t) {
      out.positions[t].reserve(alive.size());
      for (std::size_t i : alive) out.positions[t].push_back(in->positions[t][i]);
    }
    return out;
  }
  return std::nullopt;
}

// -------------------------------------------------------------------- HashJoin

HashJoin::HashJoin(Database& db, PositionOperatorPtr left, PositionOperatorPtr right,
                   ColumnId left_key, ColumnId right_key,
                   std::shared_ptr<buffer::QueryAccount> account, std::size_t max_build_rows)
    : db_(&db),
      left_(std::move(left)),
      right_(std::move(right)),
      left_reader_(db, left_key, account),
      right_reader_(db, right_key, account),
      max_build_rows_(max_build_rows) {
  const auto lt = left_->tables();
  const auto rt = right_->tables();
  require_table(lt, left_reader_.table(), db, "join key " + db.column(left_key).name);
  require_table(rt, right_reader_.table(), db, "join key " + db.column(right_key).name);
  if (left_reader_.type() != right_reader_.type()) {
    throw TypeError("join keys " + db.column(left_key).name + " and " +
                    db.column(right_key).name + " have different types");
  }
  tables_ = lt;
  tables_.insert(tables_.end(), rt.begin(), rt.end());
  left_width_ = lt.size();
  right_width_ = rt.size();
  out_ = empty_like(tables_);
}

void HashJoin::build() {
  built_ = true;
  ValueVector keys;
  std::size_t rows = 0;
  while (auto b = right_->next()) {
    right_reader_.read(*b, keys);
    for (std::size_t i = 0; i < b->rows(); ++i) {
      if (++rows > max_build_rows_) {
        throw ResourceError("hash join build side exceeds " + std::to_string(max_build_rows_) +
                            " rows");
      }
      const auto row = static_cast<std::uint32_t>(chain_.size());
      for (std::size_t k = 0; k < right_width_; ++k) build_rows_.push_back(b->positions[k][i]);
      std::uint32_t* head = nullptr;
      if (auto* u = std::get_if<std::vector<std::uint32_t>>(&keys)) {
        head = &heads_u32_.try_emplace((*u)[i], kNone).first->second;
      } else {
        head = &heads_str_.try_emplace(std::get<std::vector<std::string>>(keys)[i], kNone)
                    .first->second;
      }
      chain_.push_back(*head);
      *head = row;
    }
  }
}

template <typename Key>
void HashJoin::probe(const std::vector<Key>& keys, const JoinIndexBlock& left,
                     const std::unordered_map<Key, std::uint32_t>& heads) {
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto it = heads.find(keys[i]);
    if (it == heads.end()) continue;
    // Chains run newest first; collect and reverse to emit in build order.
    std::vector<std::uint32_t> matches;
    for (std::uint32_t r = it->second; r != kNone; r = chain_[r]) matches.push_back(r);
    for (auto m = matches.rbegin(); m != matches.rend(); ++m) {
      for (std::size_t k = 0; k < left_width_; ++k) out_.positions[k].push_back(left.positions[k][i]);
      for (std::size_t k = 0; k < right_width_; ++k) {
        out_.positions[left_width_ + k].push_back(build_rows_[std::size_t{*m} * right_width_ + k]);
      }
      if (out_.rows() == kBlockRows) {
        pending_.push_back(std::move(out_));
        out_ = empty_like(tables_);
      }
    }
  }
}

std::optional<JoinIndexBlock> HashJoin::next() {
  if (!built_) build();
  ValueVector keys;
  while (pending_.empty()) {
    auto in = left_->next();
    if (!in) {
      if (out_.rows() == 0) return std::nullopt;
      pending_.push_back(std::move(out_));
      out_ = empty_like(tables_);
      break;
    }
    if (chain_.empty()) continue;
    left_reader_.read(*in, keys);
    if (auto* u = std::get_if<std::vector<std::uint32_t>>(&keys)) {
      probe(*u, *in, heads_u32_);
    } else {
      probe(std::get<std::vector<std::string>>(keys), *in, heads_str_);
    }
  }
  JoinIndexBlock b = std::move(pending_.front());
  pending_.pop_front();
  return b;
}

// -------------------------------------------------------------------- TupleSet

std::string TupleSet::to_tsv() const {
  std::string out;
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    if (i) out += '\t';
    out += column_names[i];
  }
  out += '\n';
  for (const Tuple& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += '\t';
      if (const auto* n = std::get_if<std::int64_t>(&row[i])) {
        out += std::to_string(*n);
      } else {
        out += std::get<std::string>(row[i]);
      }
    }
    out += '\n';
  }
  return out;
}

std::string result_checksum(const TupleSet& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : t.to_tsv()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ------------------------------------------------------------------- Aggregate

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("aggregate product overflows 64 bits");
  return r;
}

void append_key(std::string& key, const ValueVector& v, std::size_t i) {
  if (const auto* u = std::get_if<std::vector<std::uint32_t>>(&v)) {
    char b[4];
    std::memcpy(b, &(*u)[i], 4);
    key.append(b, 4);
  } else {
    const std::string& s = std::get<std::vector<std::string>>(v)[i];
    const auto len = static_cast<std::uint32_t>(s.size());
    char b[4];
    std::memcpy(b, &len, 4);
    key.append(b, 4);
    key += s;
  }
}

Value to_value(const ValueVector& v, std::size_t i) {
  if (const auto* u = std::get_if<std::vector<std::uint32_t>>(&v)) {
    return static_cast<std::int64_t>((*u)[i]);
  }
  return std::get<std::vector<std::string>>(v)[i];
}

}  // namespace

TupleSet aggregate_materialize(Database& db, PositionOperator& input,
                               const std::vector<ColumnId>& group_by,
                               const std::vector<std::string>& group_names,
                               const std::vector<AggregateExpr>& aggregates,
                               std::shared_ptr<buffer::QueryAccount> account) {
  if (group_names.size() != group_by.size()) {
    throw ContractError("one name per group column is required");
  }
  const auto tables = input.tables();
  for (ColumnId c : group_by) require_table(tables, db.column(c).table, db, "group by");
  std::vector<ColumnId> agg_columns;
  for (const AggregateExpr& a : aggregates) {
    const std::size_t want = a.kind == AggregateKind::Column                ? 1
                             : a.kind == AggregateKind::ProductOfDifference ? 3
                                                                            : 2;
    if (a.columns.size() != want) throw ContractError("aggregate " + a.name + " has wrong arity");
    for (ColumnId c : a.columns) {
      require_table(tables, db.column(c).table, db, "aggregate " + a.name);
      if (db.column(c).type != storage::ValueType::U32) {
        throw TypeError("aggregate " + a.name + " sums the non-integer column " +
                        db.column(c).name);
      }
      agg_columns.push_back(c);
    }
  }

  TupleSet result;
  result.column_names = group_names;
  for (const auto& a : aggregates) result.column_names.push_back(a.name);

  SyncReader group_reader(db, group_by, account);
  SyncReader agg_reader(db, agg_columns, account);
  std::unordered_map<std::string, std::size_t> group_index;
  std::vector<Tuple> group_keys;
  std::vector<std::vector<std::int64_t>> sums;
  if (group_by.empty()) {
    group_keys.emplace_back();
    sums.emplace_back(aggregates.size(), 0);
  }

  std::vector<ValueVector> gvals, avals;
  std::string key;
  while (auto block = input.next()) {
    group_reader.read(*block, gvals);
    agg_reader.read(*block, avals);
    for (std::size_t i = 0; i < block->rows(); ++i) {
      std::size_t g = 0;
      if (!group_by.empty()) {
        key.clear();
        for (const auto& v : gvals) append_key(key, v, i);
        const auto [it, fresh] = group_index.try_emplace(key, group_keys.size());
        if (fresh) {
          Tuple t;
          for (const auto& v : gvals) t.push_back(to_value(v, i));
          group_keys.push_back(std::move(t));
          sums.emplace_back(aggregates.size(), 0);
        }
        g = it->second;
      }
      std::size_t col = 0;
      for (std::size_t a = 0; a < aggregates.size(); ++a) {
        auto at = [&](std::size_t k) {
          return static_cast<std::int64_t>(std::get<std::vector<std::uint32_t>>(avals[col + k])[i]);
        };
        std::int64_t term = 0;
        switch (aggregates[a].kind) {
          case AggregateKind::Column: term = at(0); col += 1; break;
          case AggregateKind::Product: term = checked_mul(at(0), at(1)); col += 2; break;
          case AggregateKind::Difference: term = at(0) - at(1); col += 2; break;
          case AggregateKind::ProductOfDifference:
            term = checked_mul(at(0), at(1) - at(2));
            col += 3;
            break;
        }
        if (__builtin_add_overflow(sums[g][a], term, &sums[g][a])) {
          throw OverflowError("SUM for " + aggregates[a].name + " overflows 64 bits");
        }
      }
    }
  }

  result.rows.reserve(group_keys.size());
  for (std::size_t g = 0; g < group_keys.size(); ++g) {
    Tuple t = std::move(group_keys[g]);
    for (std::int64_t s : sums[g]) t.emplace_back(s);
    result.rows.push_back(std::move(t));
  }
  return result;
}

// ------------------------------------------------------------------ SortLimit

void sort_limit(TupleSet& tuples, const std::vector<SortKey>& keys,
                std::optional<std::size_t> limit) {
  for (const SortKey& k : keys) {
    if (k.column >= tuples.column_names.size()) throw ContractError("sort key out of range");
  }
  std::stable_sort(tuples.rows.begin(), tuples.rows.end(), [&](const Tuple& a, const Tuple& b) {
    for (const SortKey& k : keys) {
      if (a[k.column] == b[k.column]) continue;
      return k.descending ? b[k.column] < a[k.column] : a[k.column] < b[k.column];
    }
    return a < b;
  });
  if (limit && tuples.rows.size() > *limit) tuples.rows.resize(*limit);
}

}  // namespace colcrunch::exec
