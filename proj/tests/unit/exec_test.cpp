#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "colcrunch/error.hpp"
#include "colcrunch/exec/plan.hpp"
#include "support/generators.hpp"
#include "support/mini_db.hpp"
#include "support/temp_dir.hpp"

using namespace colcrunch;
using namespace colcrunch::exec;
using storage::ColumnData;
using testing::MiniTable;
using U32s = std::vector<std::uint32_t>;
using Strs = std::vector<std::string>;

namespace {

U32s iota_u32(std::size_t n, std::uint32_t start = 0) {
  U32s v(n);
  std::iota(v.begin(), v.end(), start);
  return v;
}

std::vector<JoinIndexBlock> drain(PositionOperator& op) {
  std::vector<JoinIndexBlock> out;
  while (auto b = op.next()) out.push_back(std::move(*b));
  return out;
}

// Rows of a stream as tuples of positions, in stream order.
std::vector<std::vector<Position>> rows_of(PositionOperator& op) {
  std::vector<std::vector<Position>> rows;
  for (const auto& b : drain(op)) {
    for (std::size_t i = 0; i < b.rows(); ++i) {
      std::vector<Position> r;
      for (const auto& col : b.positions) r.push_back(col[i]);
      rows.push_back(r);
    }
  }
  return rows;
}

PositionOperatorPtr scan(Database& db, const std::string& table) {
  return std::make_unique<DataSource>(db, db.table_id(table), std::vector<ColumnId>{}, nullptr);
}

}  // namespace

TEST_CASE("select_access_method") {
  CHECK(select_access_method(std::vector<Position>{5, 6, 7, 8}) == AccessMethod::Range);
  CHECK(select_access_method(std::vector<Position>{2, 9, 40}) == AccessMethod::Sorted);
  CHECK(select_access_method(std::vector<Position>{9, 2, 40}) == AccessMethod::Jive);
  CHECK(select_access_method(std::vector<Position>{4}) == AccessMethod::Range);
  CHECK(select_access_method(std::vector<Position>{2, 2}) == AccessMethod::Jive);
  CHECK_THROWS_AS(select_access_method(std::vector<Position>{}), ContractError);
}

TEST_CASE("column reader") {
  testing::TempDir dir;
  const U32s big = testing::generate(testing::Distribution::UniformWidths, 3 * 1024, 5);
  auto db = testing::make_db(dir.path(), {{"t", {{"a", U32s{10, 20, 30}}}},
                                          {"big", {{"v", big}, {"s", Strs(3 * 1024, "x")}}}});

  SUBCASE("positions [0,2]") {
    ColumnReader r(*db, db->column_id("t", "a"), nullptr);
    CHECK(r.read_u32(std::vector<Position>{0, 2}) == U32s{10, 30});
    CHECK_THROWS_AS(r.read_u32(std::vector<Position>{3}), ContractError);
  }

  SUBCASE("a random permutation reads each of three pages once") {
    std::vector<Position> perm(big.size());
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(7));
    ColumnReader r(*db, db->column_id("big", "v"), nullptr);
    db->buffer().reset_stats();
    const auto got = r.read_u32(perm);
    CHECK(db->buffer().stats().total().pages_loaded == 3);
    for (std::size_t i = 0; i < perm.size(); ++i) REQUIRE(got[i] == big[perm[i]]);
  }

  SUBCASE("every admissible access method returns the same values") {
    std::vector<std::vector<Position>> lists = {
        iota_u32(1500, 200), {1, 5, 1023, 1024, 3000}, {3000, 1, 1024, 1, 77}};
    ColumnReader r(*db, db->column_id("big", "v"), nullptr);
    for (const auto& pos : lists) {
      const auto natural = select_access_method(pos);
      const auto reference = r.read_u32(pos, AccessMethod::Jive);
      for (auto m : {AccessMethod::Range, AccessMethod::Sorted, AccessMethod::Jive}) {
        const bool admissible = m == AccessMethod::Jive || natural == AccessMethod::Range ||
                                (m == AccessMethod::Sorted && natural == AccessMethod::Sorted);
        if (admissible) {
          CHECK(r.read_u32(pos, m) == reference);
        } else {
          CHECK_THROWS_AS(r.read_u32(pos, m), ContractError);
        }
      }
    }
  }

  SUBCASE("string columns and pins") {
    ColumnReader r(*db, db->column_id("big", "s"), nullptr);
    ValueVector out;
    r.read(std::vector<Position>{5, 2}, out);
    CHECK(std::get<Strs>(out) == Strs{"x", "x"});
    CHECK_THROWS_AS(r.read_u32(std::vector<Position>{0}), TypeError);
    CHECK(db->buffer().pin_count({db->column_id("big", "s"), 0}) == 0);
  }
}

TEST_CASE("data source block sizes") {
  testing::TempDir dir;
  auto db = testing::make_db(dir.path(), {{"five", {{"a", iota_u32(5)}}},
                                          {"many", {{"a", iota_u32(10000)}}},
                                          {"none", {{"a", U32s{}}}}});
  SUBCASE("5 rows") {
    auto src = scan(*db, "five");
    const auto blocks = drain(*src);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].positions[0] == std::vector<Position>{0, 1, 2, 3, 4});
  }
  SUBCASE("10000 rows") {
    auto src = scan(*db, "many");
    const auto blocks = drain(*src);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks[0].rows() == 4096);
    CHECK(blocks[1].rows() == 4096);
    CHECK(blocks[2].rows() == 1808);
    CHECK(blocks[2].positions[0].front() == 8192);
    for (const auto& b : blocks) b.check(*db);
  }
  SUBCASE("empty table") {
    auto src = scan(*db, "none");
    CHECK_FALSE(src->next().has_value());
  }
  SUBCASE("unknown table") { CHECK_THROWS_AS(db->table_id("nope"), NotFoundError); }
  SUBCASE("prefetch runs ahead of the cursor") {
    DataSource src(*db, db->table_id("many"), {db->column_id("many", "a")}, nullptr);
    src.next();
    db->buffer().drain();
    // Window 2 at 1024 values per page: pages 0 and 1 are requested up front.
    CHECK(db->buffer().stats().prefetch_issued == 2);
    CHECK(db->buffer().is_resident({db->column_id("many", "a"), 1}));
  }
}

TEST_CASE("filter") {
  testing::TempDir dir;
  auto db = testing::make_db(
      dir.path(), {{"t", {{"a", U32s{3, 7, 3}}, {"s", Strs{"ASIA", "EUROPE", "AMERICA"}}}}});
  const ColumnId a = db->column_id("t", "a");
  const ColumnId s = db->column_id("t", "s");
  auto run = [&](std::vector<Condition> conds) {
    Filter f(*db, scan(*db, "t"), std::move(conds), nullptr);
    std::vector<Position> out;
    for (const auto& r : rows_of(f)) out.push_back(r[0]);
    return out;
  };
  CHECK(run({{a, CompareOp::Ge, {0u}}}) == std::vector<Position>{0, 1, 2});
  CHECK(run({{a, CompareOp::Gt, {100u}}}).empty());
  CHECK(run({{a, CompareOp::Eq, {3u}}}) == std::vector<Position>{0, 2});
  CHECK(run({{a, CompareOp::Lt, {7u}}}) == std::vector<Position>{0, 2});
  CHECK(run({{a, CompareOp::Le, {7u}}}) == std::vector<Position>{0, 1, 2});
  CHECK(run({{a, CompareOp::Between, {4u, 7u}}}) == std::vector<Position>{1});
  CHECK(run({{a, CompareOp::InSet, {7u, 9u}}}) == std::vector<Position>{1});
  CHECK(run({{s, CompareOp::Eq, {std::string("ASIA")}}}) == std::vector<Position>{0});
  CHECK(run({{s, CompareOp::Between, {std::string("AMERICA"), std::string("ASIA")}}}) ==
        std::vector<Position>{0, 2});
  CHECK(run({{a, CompareOp::Eq, {3u}}, {s, CompareOp::Eq, {std::string("AMERICA")}}}) ==
        std::vector<Position>{2});
  CHECK_THROWS_AS(run({{a, CompareOp::Eq, {std::string("3")}}}), TypeError);
  CHECK_THROWS_AS(run({{s, CompareOp::Eq, {3u}}}), TypeError);
  CHECK_THROWS_AS(run({{a, CompareOp::Between, {3u}}}), ContractError);
}

TEST_CASE("hash join") {
  testing::TempDir dir;
  auto db = testing::make_db(
      dir.path(),
      {{"t1", {{"k", U32s{1, 2}}, {"name", Strs{"a", "b"}}}},
       {"t2", {{"k", U32s{2, 1}}, {"name", Strs{"b", "a"}}, {"k23", U32s{7, 8}}}},
       {"t3", {{"k", U32s{9, 7}}}},
       {"dup", {{"k", U32s{1, 1, 5}}}},
       {"empty", {{"k", U32s{}}}}});
  auto col = [&](const char* t, const char* c) { return db->column_id(t, c); };

  SUBCASE("keys [a,b] against [b,a]") {
    HashJoin j(*db, scan(*db, "t1"), scan(*db, "t2"), col("t1", "k"), col("t2", "k"), nullptr);
    CHECK(j.tables() == std::vector<TableId>{db->table_id("t1"), db->table_id("t2")});
    CHECK(rows_of(j) == std::vector<std::vector<Position>>{{0, 1}, {1, 0}});
    HashJoin js(*db, scan(*db, "t1"), scan(*db, "t2"), col("t1", "name"), col("t2", "name"),
                nullptr);
    CHECK(rows_of(js) == std::vector<std::vector<Position>>{{0, 1}, {1, 0}});
  }
  SUBCASE("empty build side") {
    HashJoin j(*db, scan(*db, "t1"), scan(*db, "empty"), col("t1", "k"), col("empty", "k"),
               nullptr);
    CHECK_FALSE(j.next().has_value());
  }
  SUBCASE("duplicate keys produce a cross product") {
    HashJoin j(*db, scan(*db, "dup"), scan(*db, "dup"), col("dup", "k"), col("dup", "k"), nullptr);
    CHECK(rows_of(j) == std::vector<std::vector<Position>>{
                            {0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}});
  }
  SUBCASE("a chain of two joins forms a three-table row") {
    // t1 row 1 joins t2 row 0, which joins t3 row 1.
    auto j1 = std::make_unique<HashJoin>(*db, scan(*db, "t1"), scan(*db, "t2"), col("t1", "k"),
                                         col("t2", "k"), nullptr);
    auto fil = std::make_unique<Filter>(
        *db, std::move(j1), std::vector<Condition>{{col("t1", "k"), CompareOp::Eq, {2u}}}, nullptr);
    HashJoin j2(*db, std::move(fil), scan(*db, "t3"), col("t2", "k23"), col("t3", "k"), nullptr);
    const auto tables = j2.tables();
    const auto blocks = drain(j2);
    REQUIRE(blocks.size() == 1);
    blocks[0].check(*db);
    CHECK(blocks[0].rows() == 1);
    CHECK(blocks[0].positions_of(db->table_id("t1"))[0] == 1);
    CHECK(blocks[0].positions_of(db->table_id("t2"))[0] == 0);
    CHECK(blocks[0].positions_of(db->table_id("t3"))[0] == 1);
    ColumnReader r(*db, col("t2", "k"), nullptr);
    ValueVector v;
    r.read(blocks[0], v);
    CHECK(std::get<U32s>(v) == U32s{2});
  }
  SUBCASE("build limit and type checks") {
    HashJoin j(*db, scan(*db, "t1"), scan(*db, "dup"), col("t1", "k"), col("dup", "k"), nullptr, 2);
    CHECK_THROWS_AS(j.next(), ResourceError);
    CHECK_THROWS_AS(HashJoin(*db, scan(*db, "t1"), scan(*db, "t2"), col("t1", "k"),
                             col("t2", "name"), nullptr),
                    TypeError);
    CHECK_THROWS_AS(HashJoin(*db, scan(*db, "t1"), scan(*db, "t2"), col("t3", "k"),
                             col("t2", "k"), nullptr),
                    ContractError);
  }
}

TEST_CASE("join output is split into bounded blocks") {
  testing::TempDir dir;
  auto db = testing::make_db(dir.path(), {{"f", {{"k", U32s(10000, 1)}}}, {"d", {{"k", U32s{1}}}}});
  HashJoin j(*db, scan(*db, "f"), scan(*db, "d"), db->column_id("f", "k"), db->column_id("d", "k"),
             nullptr);
  std::size_t total = 0;
  for (const auto& b : drain(j)) {
    CHECK(b.rows() <= kBlockRows);
    CHECK(b.rows() > 0);
    b.check(*db);
    total += b.rows();
  }
  CHECK(total == 10000);
}

TEST_CASE("aggregate materialize") {
  testing::TempDir dir;
  auto db = testing::make_db(
      dir.path(), {{"t", {{"v", U32s{10, 20, 30}}, {"g", Strs{"x", "y", "x"}}, {"w", U32s{1, 2, 3}}}},
                   {"big", {{"v", U32s{4000000000u, 4000000000u, 4000000000u}}}}});
  const ColumnId v = db->column_id("t", "v");
  const ColumnId g = db->column_id("t", "g");
  const ColumnId w = db->column_id("t", "w");

  SUBCASE("ungrouped sum") {
    auto src = scan(*db, "t");
    const auto t = aggregate_materialize(*db, *src, {}, {}, {{AggregateKind::Column, {v}, "s"}},
                                         nullptr);
    CHECK(t.rows == std::vector<Tuple>{{std::int64_t{60}}});
  }
  SUBCASE("grouped") {
    auto src = scan(*db, "t");
    auto t = aggregate_materialize(*db, *src, {g}, {"g"}, {{AggregateKind::Column, {w}, "s"}},
                                   nullptr);
    sort_limit(t, {{0, false}});
    CHECK(t.rows == std::vector<Tuple>{{std::string("x"), std::int64_t{4}},
                                       {std::string("y"), std::int64_t{2}}});
    CHECK(t.column_names == std::vector<std::string>{"g", "s"});
  }
  SUBCASE("expressions") {
    auto src = scan(*db, "t");
    const auto t = aggregate_materialize(
        *db, *src, {}, {},
        {{AggregateKind::Product, {v, w}, "p"},
         {AggregateKind::Difference, {w, v}, "d"},
         {AggregateKind::ProductOfDifference, {w, v, w}, "pd"}},
        nullptr);
    // p = 10+40+90; d = (1-10)+(2-20)+(3-30); pd = 1*9 + 2*18 + 3*27
    CHECK(t.rows == std::vector<Tuple>{{std::int64_t{140}, std::int64_t{-54}, std::int64_t{126}}});
  }
  SUBCASE("empty input") {
    auto none = [&] {
      return std::make_unique<Filter>(*db, scan(*db, "t"),
                                      std::vector<Condition>{{v, CompareOp::Gt, {1000u}}}, nullptr);
    };
    auto f1 = none();
    CHECK(aggregate_materialize(*db, *f1, {g}, {"g"}, {{AggregateKind::Column, {v}, "s"}}, nullptr)
              .rows.empty());
    auto f2 = none();
    CHECK(aggregate_materialize(*db, *f2, {}, {}, {{AggregateKind::Column, {v}, "s"}}, nullptr)
              .rows == std::vector<Tuple>{{std::int64_t{0}}});
  }
  SUBCASE("overflow is an error") {
    const ColumnId b = db->column_id("big", "v");
    auto src = scan(*db, "big");
    CHECK_THROWS_AS(aggregate_materialize(*db, *src, {}, {},
                                          {{AggregateKind::Product, {b, b}, "p"}}, nullptr),
                    OverflowError);
  }
  SUBCASE("strings cannot be summed") {
    auto src = scan(*db, "t");
    CHECK_THROWS_AS(
        aggregate_materialize(*db, *src, {}, {}, {{AggregateKind::Column, {g}, "s"}}, nullptr),
        TypeError);
  }
}

TEST_CASE("sort_limit") {
  auto make = [](std::vector<std::int64_t> v) {
    TupleSet t;
    t.column_names = {"a"};
    for (auto x : v) t.rows.push_back({x});
    return t;
  };
  auto one = make({5});
  sort_limit(one, {{0, true}});
  CHECK(one == make({5}));
  auto desc = make({1, 3, 2});
  sort_limit(desc, {{0, true}});
  CHECK(desc == make({3, 2, 1}));
  auto lim = make({1, 3, 2});
  sort_limit(lim, {{0, false}}, 2);
  CHECK(lim == make({1, 2}));

  // Equal sort keys fall back to the whole tuple, independent of input order.
  TupleSet a, b;
  a.column_names = b.column_names = {"k", "v"};
  a.rows = {{std::int64_t{1}, std::string("z")}, {std::int64_t{1}, std::string("a")}};
  b.rows = {{std::int64_t{1}, std::string("a")}, {std::int64_t{1}, std::string("z")}};
  sort_limit(a, {{0, false}});
  sort_limit(b, {{0, false}});
  CHECK(a == b);
  CHECK(a.to_tsv() == "k\tv\n1\ta\n1\tz\n");
  CHECK(result_checksum(a) == result_checksum(b));
  CHECK(result_checksum(a).size() == 16);
}

TEST_CASE("plan validation and execution") {
  testing::TempDir dir;
  auto db = testing::make_db(dir.path(), {{"t", {{"v", U32s{10, 20, 30}}, {"g", Strs{"x", "y", "x"}}}}});
  AggregateParams agg{{{"t", "g"}}, {"g"}, {{AggregateKind::Column, {{"t", "v"}}, "total"}}};

  auto plan = sort_limit(aggregate(filter(data_source("t"), {{{"t", "v"}, CompareOp::Ge, {20u}}}), agg),
                         {{1, true}});
  declare_prefetch_columns(plan);
  const auto& src = std::get<DataSourceParams>(plan.children[0].children[0].children[0].params);
  CHECK(src.prefetch.size() == 2);
  const auto t = execute_plan(plan, *db);
  CHECK(t.to_tsv() == "g\ttotal\nx\t30\ny\t20\n");

  CHECK_THROWS_AS(validate_plan(data_source("t")), ContractError);
  CHECK_THROWS_AS(validate_plan(aggregate(aggregate(data_source("t"), agg), agg)), ContractError);
  CHECK_THROWS_AS(validate_plan(aggregate(sort_limit(data_source("t"), {}), agg)), ContractError);
  PlanNode bad = data_source("t");
  bad.kind = OpKind::Filter;
  CHECK_THROWS_AS(validate_plan(aggregate(bad, agg)), ContractError);
}
