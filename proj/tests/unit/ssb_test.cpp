#include <doctest.h>

#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

#include "colcrunch/error.hpp"
#include "colcrunch/exec/plan.hpp"
#include "colcrunch/ssb/bench.hpp"
#include "colcrunch/ssb/dataset.hpp"
#include "colcrunch/ssb/queries.hpp"
#include "support/ssb_oracle.hpp"
#include "support/temp_dir.hpp"

using namespace colcrunch;
using namespace colcrunch::ssb;
using testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

const SsbDataset& small_dataset() {
  static const SsbDataset ds = generate(0.01, 42);
  return ds;
}

buffer::BufferConfig small_buffer() { return {256, 2, 4}; }

// Replaces LINEORDER of `base` with the given rows; every other column is
// filled with plausible constants.
SsbDataset with_lineorder(SsbDataset base, const std::vector<std::uint32_t>& dates,
                          const std::vector<std::uint32_t>& discounts,
                          const std::vector<std::uint32_t>& quantities,
                          const std::vector<std::uint32_t>& prices) {
  const std::size_t n = dates.size();
  TableData& lo = base.tables[0];
  for (auto& [name, data] : lo.columns) {
    if (std::holds_alternative<std::vector<std::string>>(data)) {
      data = std::vector<std::string>(n, "1-URGENT");
    } else if (name == "lo_orderdate" || name == "lo_commitdate") {
      data = dates;
    } else if (name == "lo_discount") {
      data = discounts;
    } else if (name == "lo_quantity") {
      data = quantities;
    } else if (name == "lo_extendedprice" || name == "lo_revenue") {
      data = prices;
    } else {
      data = std::vector<std::uint32_t>(n, 1);
    }
  }
  return base;
}

}  // namespace

TEST_CASE("row counts follow the scale factor") {
  CHECK(row_counts(0.01).lineorder == 60'000);
  CHECK(row_counts(0.1).lineorder == 600'000);
  CHECK(row_counts(1).customer == 30'000);
  CHECK(row_counts(1).supplier == 2'000);
  CHECK(row_counts(1).part == 200'000);
  CHECK(row_counts(4).part == 600'000);
  CHECK(row_counts(0.0001).date == 2556);
  CHECK(row_counts(1e-9).customer == 1);
  CHECK_THROWS_AS(row_counts(0), ContractError);
  CHECK_THROWS_AS(row_counts(-1), ContractError);
}

TEST_CASE("generated dataset has the expected shape and domains") {
  const auto& ds = small_dataset();
  const auto rc = row_counts(0.01);
  CHECK(ds.table(kLineorder).rows() == 60'000);
  CHECK(ds.table(kLineorder).columns.size() == 17);
  CHECK(ds.table(kDate).rows() == 2556);
  CHECK(ds.table(kCustomer).rows() == rc.customer);
  CHECK(ds.table(kSupplier).rows() == rc.supplier);
  CHECK(ds.table(kPart).rows() == rc.part);

  const auto& dk = ds.table(kDate).u32("d_datekey");
  CHECK(dk.front() == 19920101);
  CHECK(dk.back() == 19981230);
  CHECK(std::is_sorted(dk.begin(), dk.end()));
  CHECK(ds.table(kDate).strings("d_yearmonth").front() == "Jan1992");
  CHECK(ds.table(kDate).strings("d_dayofweek").front() == "Wednesday");

  const std::set<std::uint32_t> dates(dk.begin(), dk.end());
  const auto& lo = ds.table(kLineorder);
  bool keys_ok = true, domains_ok = true;
  for (std::size_t i = 0; i < lo.rows(); ++i) {
    keys_ok = keys_ok && lo.u32("lo_custkey")[i] >= 1 && lo.u32("lo_custkey")[i] <= rc.customer;
    keys_ok = keys_ok && lo.u32("lo_suppkey")[i] >= 1 && lo.u32("lo_suppkey")[i] <= rc.supplier;
    keys_ok = keys_ok && lo.u32("lo_partkey")[i] >= 1 && lo.u32("lo_partkey")[i] <= rc.part;
    keys_ok = keys_ok && dates.count(lo.u32("lo_orderdate")[i]) == 1;
    domains_ok = domains_ok && lo.u32("lo_quantity")[i] >= 1 && lo.u32("lo_quantity")[i] <= 50;
    domains_ok = domains_ok && lo.u32("lo_discount")[i] <= 10;
    domains_ok = domains_ok && lo.u32("lo_revenue")[i] ==
                                   std::uint64_t{lo.u32("lo_extendedprice")[i]} *
                                       (100 - lo.u32("lo_discount")[i]) / 100;
  }
  CHECK(keys_ok);
  CHECK(domains_ok);

  // customer keys are dense, so every lo_custkey appears in CUSTOMER
  const auto& ck = ds.table(kCustomer).u32("c_custkey");
  const std::set<std::uint32_t> custs(ck.begin(), ck.end());
  bool closed = true;
  for (auto k : lo.u32("lo_custkey")) closed = closed && custs.count(k) == 1;
  CHECK(closed);

  // lines of one order share date, customer and total
  const auto& ok = lo.u32("lo_orderkey");
  bool shared = true;
  for (std::size_t i = 1; i < ok.size(); ++i) {
    if (ok[i] == ok[i - 1]) {
      shared = shared && lo.u32("lo_orderdate")[i] == lo.u32("lo_orderdate")[i - 1] &&
               lo.u32("lo_custkey")[i] == lo.u32("lo_custkey")[i - 1] &&
               lo.u32("lo_ordtotalprice")[i] == lo.u32("lo_ordtotalprice")[i - 1];
    }
  }
  CHECK(shared);

  const auto& city = ds.table(kCustomer).strings("c_city");
  const auto& nation = ds.table(kCustomer).strings("c_nation");
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(city[i].size() == 10);
    CHECK(city[i].substr(0, 9).rfind(nation[i].substr(0, std::min<std::size_t>(9, nation[i].size())), 0) == 0);
  }
}

TEST_CASE("generation is a pure function of scale and seed") {
  TempDir a, b, c;
  generate_dataset(0.001, 42, a.path() / "d", 4096);
  generate_dataset(0.001, 42, b.path() / "d", 4096);
  generate_dataset(0.001, 43, c.path() / "d", 4096);
  std::size_t files = 0;
  bool identical = true, any_diff = false;
  for (const auto& e : std::filesystem::directory_iterator(a.path() / "d")) {
    ++files;
    const auto name = e.path().filename();
    identical = identical && slurp(e.path()) == slurp(b.path() / "d" / name);
    any_diff = any_diff || slurp(e.path()) != slurp(c.path() / "d" / name);
  }
  CHECK(files == 17 + 17 + 8 + 7 + 9 + 1);
  CHECK(identical);
  CHECK(any_diff);
}

TEST_CASE("generate_dataset refuses a non-empty directory unless forced") {
  TempDir t;
  std::ofstream(t.path() / "stray.txt") << "x";
  CHECK_THROWS_AS(generate_dataset(0.0005, 1, t.path()), IoError);
  const auto cat = generate_dataset(0.0005, 1, t.path(), 65536, true);
  CHECK(cat.at(kLineorder, "lo_quantity").total_values == 3000);
  CHECK(std::filesystem::exists(t.path() / "stray.txt"));
  CHECK_THROWS_AS(generate_dataset(0, 1, t.path() / "x"), ContractError);
}

TEST_CASE("every query id builds a valid plan") {
  for (auto id : kQueryIds) {
    const auto plan = build_query(id);
    CHECK_NOTHROW(exec::validate_plan(plan));
    CHECK(plan.kind == exec::OpKind::SortLimit);
  }
  CHECK_THROWS_AS(build_query("Q5.1"), NotFoundError);
  CHECK_THROWS_AS(build_query(""), NotFoundError);
}

TEST_CASE("Q1.1 on a three-row lineorder") {
  TempDir t;
  // only the first row has year 1993, discount in [1,3] and quantity < 25
  auto ds = with_lineorder(generate(0.0001, 7), {19930105, 19940105, 19930301}, {2, 2, 3},
                           {10, 10, 30}, {1000, 5000, 7000});
  write_dataset(ds, t.path(), 4096);
  auto db = exec::Database::open(t.path(), small_buffer());
  const auto r = exec::execute_plan(build_query("Q1.1"), *db);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.column_names == std::vector<std::string>{"revenue"});
  CHECK(std::get<std::int64_t>(r.rows[0][0]) == 2000);
  CHECK(r == testing::ssb_oracle(ds, "Q1.1"));
}

TEST_CASE("empty lineorder gives empty groups or a zero row") {
  TempDir t;
  auto ds = with_lineorder(generate(0.0001, 7), {}, {}, {}, {});
  write_dataset(ds, t.path(), 4096);
  auto db = exec::Database::open(t.path(), small_buffer());
  for (auto id : kQueryIds) {
    CAPTURE(id);
    const auto r = exec::execute_plan(build_query(id), *db);
    if (id.substr(0, 2) == "Q1") {
      REQUIRE(r.rows.size() == 1);
      CHECK(std::get<std::int64_t>(r.rows[0][0]) == 0);
    } else {
      CHECK(r.rows.empty());
    }
    CHECK(r == testing::ssb_oracle(ds, std::string(id)));
  }
}

TEST_CASE("all queries match the brute-force oracle at sf 0.01") {
  TempDir t;
  const auto& ds = small_dataset();
  write_dataset(ds, t.path(), 16384);
  std::size_t non_empty = 0;
  for (const auto codec : {codecs::CodecId::Raw, codecs::CodecId::BinaryPacking128}) {
    if (codec != codecs::CodecId::Raw) compress_lineorder(t.path(), codec);
    auto db = exec::Database::open(t.path(), {128, 2, 4});
    for (auto id : kQueryIds) {
      CAPTURE(id);
      const auto got = exec::execute_plan(build_query(id), *db);
      const auto want = testing::ssb_oracle(ds, std::string(id));
      CHECK(got.to_tsv() == want.to_tsv());
      if (codec == codecs::CodecId::Raw && !got.rows.empty()) ++non_empty;
    }
  }
  CHECK(non_empty >= 11);  // the two UK-city queries are sparse at this scale
}

TEST_CASE("compress_lineorder recodes the ten integer columns") {
  TempDir t;
  generate_dataset(0.001, 3, t.path(), 8192);
  auto cat = storage::Catalog::load(t.path() / storage::kCatalogFileName);
  CHECK(lineorder_codec(cat) == codecs::CodecId::Raw);
  const auto reports = compress_lineorder(t.path(), codecs::CodecId::VByte);
  CHECK(reports.size() == 10);
  cat = storage::Catalog::load(t.path() / storage::kCatalogFileName);
  CHECK(lineorder_codec(cat) == codecs::CodecId::VByte);
  CHECK(cat.at(kLineorder, "lo_orderkey").codec == codecs::CodecId::Raw);
  CHECK(compress_lineorder(t.path(), codecs::CodecId::VByte).empty());
  CHECK(compress_lineorder(t.path(), codecs::CodecId::VByte, true).size() == 10);

  const auto rows = size_rows(cat, reports);
  const auto over = std::find_if(rows.begin(), rows.end(), [](const SizeRow& r) {
    return r.stat.table == kLineorder && r.stat.column == storage::kOverColumns;
  });
  REQUIRE(over != rows.end());
  CHECK(over->stat.ratio() > 1.0);
  const auto text = format_sizes(rows);
  CHECK(text.rfind(std::string(kSizesCsvHeader) + "\n", 0) == 0);
  CHECK(text.find("lineorder,lo_quantity,VByte,") != std::string::npos);
  CHECK_THROWS_AS(compress_lineorder(t.path() / "missing", codecs::CodecId::VByte), IoError);
}

TEST_CASE("confidence interval uses the t distribution") {
  const auto m = mean_ci95({1, 2, 3});
  CHECK(m.mean == doctest::Approx(2.0));
  CHECK(m.ci95 == doctest::Approx(2.484).epsilon(0.0005));
  CHECK(mean_ci95({5}).ci95 == 0);
  CHECK(mean_ci95({4, 4}).ci95 == 0);
  CHECK(mean_ci95({}).mean == 0);
}

TEST_CASE("measurement CSV roundtrip and summary") {
  CHECK(format_measurements({}) == std::string(kRawCsvHeader) + "\n");
  CHECK(parse_measurements(format_measurements({})).empty());

  MeasurementRecord r;
  r.iteration = 2;
  r.scenario = Scenario::Parallel;
  r.codec = codecs::CodecId::Brotli;
  r.query_id = "Q3.2";
  r.wall_seconds = 0.1234567890123;
  r.data_access_seconds = 0.1;
  r.plan_seconds = r.wall_seconds - r.data_access_seconds;
  r.io_read_seconds = 1e-7;
  r.io_decompress_seconds = 0.05;
  r.bytes_read = 123456789012ULL;
  r.pages_loaded = 77;
  r.result_checksum = "0123456789abcdef";
  auto r2 = r;
  r2.iteration = 3;
  r2.codec = codecs::CodecId::BinaryPacking128;

  TempDir t;
  write_measurements({r, r2}, t.path() / "raw.csv");
  const auto back = read_measurements(t.path() / "raw.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  CHECK(back[1] == r2);

  const auto rows = summarize({r, r});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n == 2);
  CHECK(rows[0].wall.ci95 == 0);
  CHECK(rows[0].wall.mean == doctest::Approx(r.wall_seconds));
  const auto text = format_summary(rows);
  CHECK(text.find("Q3.2,Brotli,parallel,2,") != std::string::npos);

  CHECK_THROWS_AS(parse_measurements("nope\n"), FormatError);
  CHECK_THROWS_AS(parse_measurements(std::string(kRawCsvHeader) + "\n1,sequential,Raw,Q1.1\n"),
                  FormatError);
  CHECK_THROWS_AS(
      parse_measurements(std::string(kRawCsvHeader) +
                         "\nx,sequential,Raw,Q1.1,1,1,0,0,0,0,0,aa\n"),
      FormatError);

  // summary rows follow query order, not text order
  auto q10 = r;
  q10.query_id = "Q1.1";
  const auto ordered = summarize({r, q10});
  CHECK(ordered[0].query_id == "Q1.1");
}

TEST_CASE("shuffles are seeded and fair") {
  std::vector<std::string> q(kQueryIds.begin(), kQueryIds.end());
  CHECK(shuffled(q, 5) == shuffled(q, 5));
  CHECK(shuffled(q, iteration_seed(42, 0)) != shuffled(q, iteration_seed(42, 1)));
  auto s = shuffled(q, 9);
  std::sort(s.begin(), s.end());
  auto sorted = q;
  std::sort(sorted.begin(), sorted.end());
  CHECK(s == sorted);

  std::map<std::string, int> first;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) ++first[shuffled(q, seed).front()];
  for (const auto& id : q) {
    CAPTURE(id);
    CHECK(first[id] >= 40);
    CHECK(first[id] <= 120);
  }
}

TEST_CASE("checksum registry detects changed results") {
  ChecksumRegistry reg;
  reg.check("Q1.1", "aa", "x");
  CHECK_NOTHROW(reg.check("Q1.1", "aa", "y"));
  CHECK_THROWS_AS(reg.check("Q1.1", "bb", "z"), Error);
  CHECK(reg.snapshot().at("Q1.1") == "aa");
}

TEST_CASE("bench config rules") {
  BenchConfig c;
  CHECK(c.query_set().size() == 13);
  c.scenario = Scenario::Parallel;
  c.io_threads = 4;
  CHECK(c.buffer_config().io_threads == 1);
  c.normalize();
  CHECK(c.io_threads == 1);
  CHECK(parse_scenario("parallel") == Scenario::Parallel);
  CHECK_FALSE(parse_scenario("both"));
}

TEST_CASE("scenario runs and the iteration protocol") {
  TempDir t;
  generate_dataset(0.002, 11, t.path(), 8192);
  compress_lineorder(t.path(), codecs::CodecId::FastPFor128);
  BenchConfig cfg;
  cfg.codec = codecs::CodecId::FastPFor128;
  cfg.buffer_pages = 512;
  auto db = exec::Database::open(t.path(), cfg.buffer_config());
  ChecksumRegistry reg;
  const std::vector<std::string> all(kQueryIds.begin(), kQueryIds.end());

  SUBCASE("sequential intervals do not overlap") {
    const auto run = run_scenario(cfg, *db, all, 0, reg);
    REQUIRE(run.records.size() == 13);
    for (std::size_t i = 1; i < run.records.size(); ++i) {
      CHECK(run.submitted_at[i] >= run.completed_at[i - 1]);
    }
    for (const auto& r : run.records) {
      CHECK(r.plan_seconds + r.data_access_seconds == doctest::Approx(r.wall_seconds).epsilon(0.02));
      CHECK(r.plan_seconds >= 0);
      CHECK(r.codec == codecs::CodecId::FastPFor128);
    }
  }

  SUBCASE("parallel submissions share one timestamp") {
    cfg.scenario = Scenario::Parallel;
    auto pdb = exec::Database::open(t.path(), cfg.buffer_config());
    const auto run = run_scenario(cfg, *pdb, all, 0, reg);
    REQUIRE(run.records.size() == 13);
    for (double s : run.submitted_at) CHECK(s == run.submitted_at.front());
    std::set<std::string> ids;
    for (const auto& r : run.records) ids.insert(r.query_id);
    CHECK(ids.size() == 13);
  }

  SUBCASE("cold per-query volumes equal the page traces") {
    cfg.cold_per_query = true;
    const auto run = run_scenario(cfg, *db, all, 0, reg);
    for (std::size_t i = 0; i < run.records.size(); ++i) {
      CAPTURE(run.records[i].query_id);
      std::uint64_t sum = 0;
      std::set<std::pair<std::uint32_t, std::uint32_t>> pages;
      for (const auto& l : run.traces[i]) {
        sum += l.compressed_len;
        pages.emplace(l.ref.column, l.ref.page_no);
      }
      CHECK(run.records[i].bytes_read == sum);
      CHECK(run.records[i].pages_loaded == run.traces[i].size());
      CHECK(pages.size() == run.traces[i].size());
      CHECK(run.records[i].bytes_read > 0);
    }
  }

  SUBCASE("iterations=1 executes each query twice and records it once") {
    cfg.iterations = 1;
    const auto res = run_iterations(cfg, *db, reg);
    CHECK(res.records.size() == 13);
    for (const auto& id : all) CHECK(res.executions.at(id) == 2);
    CHECK(res.orders.size() == 1);
    CHECK_FALSE(res.cache_mode.empty());
  }

  SUBCASE("iterations=3 executes each query six times with distinct orders") {
    cfg.iterations = 3;
    cfg.drop_caches_cmd = "true";
    const auto res = run_iterations(cfg, *db, reg);
    CHECK(res.records.size() == 39);
    for (const auto& id : all) CHECK(res.executions.at(id) == 6);
    CHECK(res.orders[0] != res.orders[1]);
    CHECK(res.orders[1] != res.orders[2]);
    CHECK(res.cache_mode == "hook");
    CHECK(res.warnings.empty());
    const auto rows = summarize(res.records);
    CHECK(rows.size() == 13);
    for (const auto& row : rows) CHECK(row.n == 3);
    CHECK(res.io_totals.read_ns + res.io_totals.decompress_ns <= res.io_totals.busy_ns);
  }

  SUBCASE("a failing hook is a warning") {
    cfg.iterations = 1;
    cfg.queries = {"Q1.1", "Q2.1"};
    cfg.drop_caches_cmd = "exit 3";
    const auto res = run_iterations(cfg, *db, reg);
    CHECK(res.records.size() == 2);
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0].find("status") != std::string::npos);
  }

  SUBCASE("unknown query ids are rejected") {
    CHECK_THROWS_AS(run_scenario(cfg, *db, {"Q9.9"}, 0, reg), NotFoundError);
  }
}
