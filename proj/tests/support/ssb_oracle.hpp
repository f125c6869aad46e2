#pragma once

// Naive evaluator for the 13 star-schema queries over in-memory tables. It
// shares no code with the query engine beyond the result container.

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "colcrunch/exec/operators.hpp"
#include "colcrunch/ssb/dataset.hpp"

namespace colcrunch::testing {

inline exec::TupleSet ssb_oracle(const ssb::SsbDataset& ds, const std::string& id) {
  using exec::Tuple;
  using exec::Value;
  const auto& lo = ds.table(ssb::kLineorder);
  const auto& dt = ds.table(ssb::kDate);
  const auto& cu = ds.table(ssb::kCustomer);
  const auto& su = ds.table(ssb::kSupplier);
  const auto& pa = ds.table(ssb::kPart);

  const auto& orderdate = lo.u32("lo_orderdate");
  const auto& custkey = lo.u32("lo_custkey");
  const auto& suppkey = lo.u32("lo_suppkey");
  const auto& partkey = lo.u32("lo_partkey");
  const auto& quantity = lo.u32("lo_quantity");
  const auto& discount = lo.u32("lo_discount");
  const auto& extprice = lo.u32("lo_extendedprice");
  const auto& revenue = lo.u32("lo_revenue");
  const auto& supplycost = lo.u32("lo_supplycost");

  std::unordered_map<std::uint32_t, std::size_t> date_row;
  const auto& datekey = dt.u32("d_datekey");
  for (std::size_t i = 0; i < datekey.size(); ++i) date_row[datekey[i]] = i;
  const auto& d_year = dt.u32("d_year");
  const auto& d_yearmonthnum = dt.u32("d_yearmonthnum");
  const auto& d_week = dt.u32("d_weeknuminyear");
  const auto& d_yearmonth = dt.strings("d_yearmonth");

  const auto& c_region = cu.strings("c_region");
  const auto& c_nation = cu.strings("c_nation");
  const auto& c_city = cu.strings("c_city");
  const auto& s_region = su.strings("s_region");
  const auto& s_nation = su.strings("s_nation");
  const auto& s_city = su.strings("s_city");
  const auto& p_category = pa.strings("p_category");
  const auto& p_brand = pa.strings("p_brand1");
  const auto& p_mfgr = pa.strings("p_mfgr");

  exec::TupleSet out;
  const std::size_t n = orderdate.size();

  if (id.rfind("Q1.", 0) == 0) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t d = date_row.at(orderdate[i]);
      const auto q = quantity[i];
      const auto disc = discount[i];
      bool ok = false;
      if (id == "Q1.1") ok = d_year[d] == 1993 && disc >= 1 && disc <= 3 && q < 25;
      if (id == "Q1.2") {
        ok = d_yearmonthnum[d] == 199401 && disc >= 4 && disc <= 6 && q >= 26 && q <= 35;
      }
      if (id == "Q1.3") {
        ok = d_week[d] == 6 && d_year[d] == 1994 && disc >= 5 && disc <= 7 && q >= 26 && q <= 35;
      }
      if (ok) sum += std::int64_t{extprice[i]} * disc;
    }
    out.column_names = {"revenue"};
    out.rows.push_back({Value{sum}});
    return out;
  }

  std::map<Tuple, std::int64_t> groups;
  auto yr = [&](std::size_t d) { return Value{std::int64_t{d_year[d]}}; };
  const bool uk = id == "Q3.3" || id == "Q3.4";
  auto uk_city = [](const std::string& c) { return c == "UNITED KI1" || c == "UNITED KI5"; };

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = date_row.at(orderdate[i]);
    const std::size_t c = custkey[i] - 1;
    const std::size_t s = suppkey[i] - 1;
    const std::size_t p = partkey[i] - 1;
    const auto year = d_year[d];
    if (id == "Q2.1" || id == "Q2.2" || id == "Q2.3") {
      bool ok = false;
      if (id == "Q2.1") ok = p_category[p] == "MFGR#12" && s_region[s] == "AMERICA";
      if (id == "Q2.2") {
        ok = p_brand[p] >= "MFGR#2221" && p_brand[p] <= "MFGR#2228" && s_region[s] == "ASIA";
      }
      if (id == "Q2.3") ok = p_brand[p] == "MFGR#2239" && s_region[s] == "EUROPE";
      if (ok) groups[{yr(d), Value{p_brand[p]}}] += revenue[i];
    } else if (id == "Q3.1") {
      if (c_region[c] == "ASIA" && s_region[s] == "ASIA" && year >= 1992 && year <= 1997) {
        groups[{Value{c_nation[c]}, Value{s_nation[s]}, yr(d)}] += revenue[i];
      }
    } else if (id == "Q3.2") {
      if (c_nation[c] == "UNITED STATES" && s_nation[s] == "UNITED STATES" && year >= 1992 &&
          year <= 1997) {
        groups[{Value{c_city[c]}, Value{s_city[s]}, yr(d)}] += revenue[i];
      }
    } else if (uk) {
      const bool when =
          id == "Q3.3" ? (year >= 1992 && year <= 1997) : d_yearmonth[d] == "Dec1997";
      if (uk_city(c_city[c]) && uk_city(s_city[s]) && when) {
        groups[{Value{c_city[c]}, Value{s_city[s]}, yr(d)}] += revenue[i];
      }
    } else if (id == "Q4.1" || id == "Q4.2" || id == "Q4.3") {
      const std::int64_t profit = std::int64_t{revenue[i]} - supplycost[i];
      const bool mfgr = p_mfgr[p] == "MFGR#1" || p_mfgr[p] == "MFGR#2";
      const bool y9798 = year == 1997 || year == 1998;
      if (id == "Q4.1" && c_region[c] == "AMERICA" && s_region[s] == "AMERICA" && mfgr) {
        groups[{yr(d), Value{c_nation[c]}}] += profit;
      }
      if (id == "Q4.2" && c_region[c] == "AMERICA" && s_region[s] == "AMERICA" && mfgr && y9798) {
        groups[{yr(d), Value{s_nation[s]}, Value{p_category[p]}}] += profit;
      }
      if (id == "Q4.3" && c_region[c] == "AMERICA" && s_nation[s] == "UNITED STATES" &&
          p_category[p] == "MFGR#14" && y9798) {
        groups[{yr(d), Value{s_city[s]}, Value{p_brand[p]}}] += profit;
      }
    } else {
      throw std::invalid_argument("oracle: unknown query " + id);
    }
  }

  if (id.rfind("Q2.", 0) == 0) {
    out.column_names = {"d_year", "p_brand1", "revenue"};
  } else if (id == "Q3.1") {
    out.column_names = {"c_nation", "s_nation", "d_year", "revenue"};
  } else if (id.rfind("Q3.", 0) == 0) {
    out.column_names = {"c_city", "s_city", "d_year", "revenue"};
  } else if (id == "Q4.1") {
    out.column_names = {"d_year", "c_nation", "profit"};
  } else if (id == "Q4.2") {
    out.column_names = {"d_year", "s_nation", "p_category", "profit"};
  } else {
    out.column_names = {"d_year", "s_city", "p_brand1", "profit"};
  }
  for (const auto& [key, sum] : groups) {
    Tuple t = key;
    t.push_back(Value{sum});
    out.rows.push_back(std::move(t));
  }
  if (id.rfind("Q3.", 0) == 0) {
    // year ascending, revenue descending, then the whole tuple
    std::sort(out.rows.begin(), out.rows.end(), [](const Tuple& a, const Tuple& b) {
      if (a[2] != b[2]) return a[2] < b[2];
      if (a[3] != b[3]) return b[3] < a[3];
      return a < b;
    });
  }
  return out;
}

}  // namespace colcrunch::testing
