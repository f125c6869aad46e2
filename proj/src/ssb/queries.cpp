#include "colcrunch/ssb/queries.hpp"

#include <string>

#include "colcrunch/error.hpp"
#include "colcrunch/ssb/dataset.hpp"

namespace colcrunch::ssb {

namespace {

using exec::AggregateKind;
using exec::ColumnRef;
using exec::CompareOp;
using exec::ConditionSpec;
using exec::Literal;
using exec::PlanNode;
using exec::SortKey;

ColumnRef lo(const char* c) { return {std::string(kLineorder), c}; }
ColumnRef dt(const char* c) { return {std::string(kDate), c}; }
ColumnRef cu(const char* c) { return {std::string(kCustomer), c}; }
ColumnRef su(const char* c) { return {std::string(kSupplier), c}; }
ColumnRef pa(const char* c) { return {std::string(kPart), c}; }

ConditionSpec eq(ColumnRef c, Literal v) { return {std::move(c), CompareOp::Eq, {std::move(v)}}; }
ConditionSpec lt(ColumnRef c, std::uint32_t v) { return {std::move(c), CompareOp::Lt, {v}}; }
ConditionSpec between(ColumnRef c, Literal a, Literal b) {
  return {std::move(c), CompareOp::Between, {std::move(a), std::move(b)}};
}
ConditionSpec in(ColumnRef c, std::vector<Literal> v) {
  return {std::move(c), CompareOp::InSet, std::move(v)};
}

PlanNode source(std::string_view table, std::vector<ConditionSpec> conds = {}) {
  PlanNode n = exec::data_source(std::string(table));
  return conds.empty() ? n : exec::filter(std::move(n), std::move(conds));
}

PlanNode join_date(PlanNode probe, std::vector<ConditionSpec> conds) {
  return exec::hash_join(std::move(probe), source(kDate, std::move(conds)), lo("lo_orderdate"),
                         dt("d_datekey"));
}
PlanNode join_customer(PlanNode probe, std::vector<ConditionSpec> conds) {
  return exec::hash_join(std::move(probe), source(kCustomer, std::move(conds)), lo("lo_custkey"),
                         cu("c_custkey"));
}
PlanNode join_supplier(PlanNode probe, std::vector<ConditionSpec> conds) {
  return exec::hash_join(std::move(probe), source(kSupplier, std::move(conds)), lo("lo_suppkey"),
                         su("s_suppkey"));
}
PlanNode join_part(PlanNode probe, std::vector<ConditionSpec> conds) {
  return exec::hash_join(std::move(probe), source(kPart, std::move(conds)), lo("lo_partkey"),
                         pa("p_partkey"));
}

PlanNode finish(PlanNode joined, std::vector<ColumnRef> group_by, std::vector<std::string> names,
                exec::AggregateSpec agg, std::vector<SortKey> order) {
  exec::AggregateParams p{std::move(group_by), std::move(names), {std::move(agg)}};
  PlanNode root = exec::sort_limit(exec::aggregate(std::move(joined), std::move(p)), std::move(order));
  exec::declare_prefetch_columns(root);
  return root;
}

exec::AggregateSpec revenue_sum() { return {AggregateKind::Column, {lo("lo_revenue")}, "revenue"}; }
exec::AggregateSpec profit_sum() {
  return {AggregateKind::Difference, {lo("lo_revenue"), lo("lo_supplycost")}, "profit"};
}

PlanNode flight1(std::vector<ConditionSpec> lo_conds, std::vector<ConditionSpec> date_conds) {
  PlanNode joined = join_date(source(kLineorder, std::move(lo_conds)), std::move(date_conds));
  return finish(std::move(joined), {}, {},
                {AggregateKind::Product, {lo("lo_extendedprice"), lo("lo_discount")}, "revenue"},
                {});
}

PlanNode flight2(ConditionSpec part_cond, const char* region) {
  PlanNode j = join_part(source(kLineorder), {std::move(part_cond)});
  j = join_supplier(std::move(j), {eq(su("s_region"), std::string(region))});
  j = join_date(std::move(j), {});
  return finish(std::move(j), {dt("d_year"), pa("p_brand1")}, {"d_year", "p_brand1"},
                revenue_sum(), {{0, false}, {1, false}});
}

PlanNode flight3(ConditionSpec cust, ConditionSpec supp, ConditionSpec date, const char* cust_col,
                 const char* supp_col) {
  PlanNode j = join_customer(source(kLineorder), {std::move(cust)});
  j = join_supplier(std::move(j), {std::move(supp)});
  j = join_date(std::move(j), {std::move(date)});
  return finish(std::move(j), {cu(cust_col), su(supp_col), dt("d_year")},
                {cust_col, supp_col, "d_year"}, revenue_sum(), {{2, false}, {3, true}});
}

std::vector<Literal> uk_cities() { return {std::string("UNITED KI1"), std::string("UNITED KI5")}; }
std::vector<Literal> mfgr12() { return {std::string("MFGR#1"), std::string("MFGR#2")}; }

}  // namespace

exec::PlanNode build_query(std::string_view id) {
  if (id == "Q1.1") {
    return flight1({between(lo("lo_discount"), 1u, 3u), lt(lo("lo_quantity"), 25)},
                   {eq(dt("d_year"), 1993u)});
  }
  if (id == "Q1.2") {
    return flight1({between(lo("lo_discount"), 4u, 6u), between(lo("lo_quantity"), 26u, 35u)},
                   {eq(dt("d_yearmonthnum"), 199401u)});
  }
  if (id == "Q1.3") {
    return flight1({between(lo("lo_discount"), 5u, 7u), between(lo("lo_quantity"), 26u, 35u)},
                   {eq(dt("d_weeknuminyear"), 6u), eq(dt("d_year"), 1994u)});
  }
  if (id == "Q2.1") return flight2(eq(pa("p_category"), std::string("MFGR#12")), "AMERICA");
  if (id == "Q2.2") {
    return flight2(between(pa("p_brand1"), std::string("MFGR#2221"), std::string("MFGR#2228")),
                   "ASIA");
  }
  if (id == "Q2.3") return flight2(eq(pa("p_brand1"), std::string("MFGR#2239")), "EUROPE");
  if (id == "Q3.1") {
    return flight3(eq(cu("c_region"), std::string("ASIA")), eq(su("s_region"), std::string("ASIA")),
                   between(dt("d_year"), 1992u, 1997u), "c_nation", "s_nation");
  }
  if (id == "Q3.2") {
    return flight3(eq(cu("c_nation"), std::string("UNITED STATES")),
                   eq(su("s_nation"), std::string("UNITED STATES")),
                   between(dt("d_year"), 1992u, 1997u), "c_city", "s_city");
  }
  if (id == "Q3.3") {
    return flight3(in(cu("c_city"), uk_cities()), in(su("s_city"), uk_cities()),
                   between(dt("d_year"), 1992u, 1997u), "c_city", "s_city");
  }
  if (id == "Q3.4") {
    return flight3(in(cu("c_city"), uk_cities()), in(su("s_city"), uk_cities()),
                   eq(dt("d_yearmonth"), std::string("Dec1997")), "c_city", "s_city");
  }
  if (id == "Q4.1") {
    PlanNode j = join_customer(source(kLineorder), {eq(cu("c_region"), std::string("AMERICA"))});
    j = join_supplier(std::move(j), {eq(su("s_region"), std::string("AMERICA"))});
    j = join_part(std::move(j), {in(pa("p_mfgr"), mfgr12())});
    j = join_date(std::move(j), {});
    return finish(std::move(j), {dt("d_year"), cu("c_nation")}, {"d_year", "c_nation"},
                  profit_sum(), {{0, false}, {1, false}});
  }
  if (id == "Q4.2") {
    PlanNode j = join_customer(source(kLineorder), {eq(cu("c_region"), std::string("AMERICA"))});
    j = join_supplier(std::move(j), {eq(su("s_region"), std::string("AMERICA"))});
    j = join_part(std::move(j), {in(pa("p_mfgr"), mfgr12())});
    j = join_date(std::move(j), {in(dt("d_year"), {1997u, 1998u})});
    return finish(std::move(j), {dt("d_year"), su("s_nation"), pa("p_category")},
                  {"d_year", "s_nation", "p_category"}, profit_sum(),
                  {{0, false}, {1, false}, {2, false}});
  }
  if (id == "Q4.3") {
    PlanNode j = join_customer(source(kLineorder), {eq(cu("c_region"), std::string("AMERICA"))});
    j = join_supplier(std::move(j), {eq(su("s_nation"), std::string("UNITED STATES"))});
    j = join_part(std::move(j), {eq(pa("p_category"), std::string("MFGR#14"))});
    j = join_date(std::move(j), {in(dt("d_year"), {1997u, 1998u})});
    return finish(std::move(j), {dt("d_year"), su("s_city"), pa("p_brand1")},
                  {"d_year", "s_city", "p_brand1"}, profit_sum(),
                  {{0, false}, {1, false}, {2, false}});
  }
  throw NotFoundError("unknown query id '" + std::string(id) + "'");
}

}  // namespace colcrunch::ssb
