#include "colcrunch/ssb/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "colcrunch/error.hpp"
#include "colcrunch/exec/plan.hpp"
#include "colcrunch/ssb/dataset.hpp"
#include "colcrunch/ssb/queries.hpp"
#include "colcrunch/ssb/rng.hpp"

namespace colcrunch::ssb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct QueryOutcome {
  MeasurementRecord record;
  std::vector<buffer::TracedLoad> trace;
};

// Runs one query; wall time is measured from `submitted`.
QueryOutcome run_one(const BenchConfig& config, exec::Database& db, const std::string& id,
                     std::uint32_t iteration, Clock::time_point submitted) {
  const exec::PlanNode plan = build_query(id);
  auto account = std::make_shared<buffer::QueryAccount>();
  exec::TupleSet result;
  try {
    result = exec::execute_plan(plan, db, account);
  } catch (const std::exception& e) {
    throw Error("query " + id + " failed in iteration " + std::to_string(iteration) + ": " +
                e.what());
  }
  const auto done = Clock::now();
  // Sequential runs wait for trailing prefetches so the query's I/O totals
  // are complete; this happens after the clock stops.
  if (config.scenario == Scenario::Sequential) db.buffer().drain();

  QueryOutcome out;
  MeasurementRecord& r = out.record;
  r.iteration = iteration;
  r.scenario = config.scenario;
  r.codec = config.codec;
  r.query_id = id;
  r.wall_seconds = seconds_between(submitted, done);
  r.data_access_seconds = std::min(r.wall_seconds, account->fetch_ns.load() * 1e-9);
  r.plan_seconds = r.wall_seconds - r.data_access_seconds;
  r.io_read_seconds = account->read_ns.load() * 1e-9;
  r.io_decompress_seconds = account->decompress_ns.load() * 1e-9;
  r.bytes_read = account->bytes_read.load();
  r.pages_loaded = account->pages_loaded.load();
  r.result_checksum = exec::result_checksum(result);
  out.trace = account->trace();
  return out;
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  return s == Scenario::Sequential ? "sequential" : "parallel";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "sequential") return Scenario::Sequential;
  if (name == "parallel") return Scenario::Parallel;
  return std::nullopt;
}

void BenchConfig::normalize() {
  if (scenario == Scenario::Parallel) io_threads = 1;
}

buffer::BufferConfig BenchConfig::buffer_config() const {
  buffer::BufferConfig b;
  b.capacity_pages = buffer_pages;
  b.io_threads = scenario == Scenario::Parallel ? 1 : io_threads;
  b.prefetch_window = prefetch_window;
  return b;
}

std::vector<std::string> BenchConfig::query_set() const {
  if (!queries.empty()) return queries;
  return {kQueryIds.begin(), kQueryIds.end()};
}

void ChecksumRegistry::check(const std::string& query_id, const std::string& checksum,
                             std::string_view context) {
  std::lock_guard lk(mu_);
  const auto [it, inserted] = expected_.emplace(query_id, checksum);
  if (!inserted && it->second != checksum) {
    throw Error("result of " + query_id + " changed (" + std::string(context) + "): expected " +
                it->second + ", got " + checksum);
  }
}

std::map<std::string, std::string> ChecksumRegistry::snapshot() const {
  std::lock_guard lk(mu_);
  return expected_;
}

ScenarioRun run_scenario(const BenchConfig& config, exec::Database& db,
                         const std::vector<std::string>& order, std::uint32_t iteration,
                         ChecksumRegistry& registry) {
  for (const auto& id : order) build_query(id);  // reject unknown ids up front
  const std::string context = std::string(codecs::codec_display_name(config.codec)) + ", " +
                              std::string(scenario_name(config.scenario)) + ", iteration " +
                              std::to_string(iteration);
  ScenarioRun run;
  const auto start = Clock::now();
  auto keep = [&](QueryOutcome&& o, Clock::time_point submitted) {
    registry.check(o.record.query_id, o.record.result_checksum, context);
    run.submitted_at.push_back(seconds_between(start, submitted));
    run.completed_at.push_back(seconds_between(start, submitted) + o.record.wall_seconds);
    run.records.push_back(std::move(o.record));
    run.traces.push_back(std::move(o.trace));
  };

  if (config.scenario == Scenario::Sequential) {
    for (const auto& id : order) {
      if (config.cold_per_query) {
        db.buffer().clear();
      }
      const auto submitted = Clock::now();
      keep(run_one(config, db, id, iteration, submitted), submitted);
    }
    return run;
  }

  // Parallel: the whole set goes into one queue at once and the workers
  // drain it.
  std::mutex mu;
  std::deque<std::string> queue;
  std::exception_ptr failure;
  Clock::time_point submitted;
  {
    std::lock_guard lk(mu);
    submitted = Clock::now();
    queue.assign(order.begin(), order.end());
  }
  const std::uint32_t workers =
      std::max<std::uint32_t>(1, std::min<std::uint32_t>(config.worker_threads,
                                                         static_cast<std::uint32_t>(order.size())));
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::uint32_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        std::string id;
        {
          std::lock_guard lk(mu);
          if (queue.empty() || failure) return;
          id = std::move(queue.front());
          queue.pop_front();
        }
        try {
          QueryOutcome o = run_one(config, db, id, iteration, submitted);
          std::lock_guard lk(mu);
          keep(std::move(o), submitted);
        } catch (...) {
          std::lock_guard lk(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  db.buffer().drain();
  if (failure) std::rethrow_exception(failure);
  return run;
}

std::uint64_t iteration_seed(std::uint64_t seed, std::uint32_t iteration) {
  return mix_seed(seed, 1000 + iteration);
}

std::vector<std::string> shuffled(std::vector<std::string> queries, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = queries.size(); i > 1; --i) {
    std::swap(queries[i - 1], queries[rng.below(i)]);
  }
  return queries;
}

IterationsResult run_iterations(const BenchConfig& config_in, exec::Database& db,
                                ChecksumRegistry& registry) {
  BenchConfig config = config_in;
  config.normalize();
  const auto queries = config.query_set();
  IterationsResult out;
  db.buffer().drain();
  db.buffer().clear();
  db.buffer().reset_stats();

  for (std::uint32_t it = 0; it < config.iterations; ++it) {
    const auto order = shuffled(queries, iteration_seed(config.seed, it));
    out.orders.push_back(order);

    run_scenario(config, db, order, it, registry);  // warm-up, discarded
    const auto t0 = Clock::now();
    ScenarioRun measured = run_scenario(config, db, order, it, registry);
    out.measured_wall_seconds += seconds_between(t0, Clock::now());
    out.io_totals += db.buffer().stats().total();
    for (const auto& id : order) out.executions[id] += 2;
    for (auto& r : measured.records) out.records.push_back(std::move(r));

    if (!config.drop_caches_cmd.empty()) {
      out.cache_mode = "hook";
      const int rc = std::system(config.drop_caches_cmd.c_str());
      if (rc != 0) {
        out.warnings.push_back("cache-drop hook exited with status " + std::to_string(rc) +
                               " after iteration " + std::to_string(it));
      }
    } else {
      bool all = true;
      for (std::size_t c = 0; c < db.buffer().column_count(); ++c) {
        all = db.buffer().file(static_cast<buffer::ColumnId>(c)).drop_os_cache() && all;
      }
      out.cache_mode = all ? "fadvise-dontneed" : "warm-OS-cache";
    }
    db.buffer().clear();
    db.buffer().reset_stats();
  }
  return out;
}

// --------------------------------------------------------------- CSV output

namespace {

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, std::string_view column) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad " + std::string(column) + " '" +
                      std::string(s) + "'");
  }
  return v;
}

std::optional<codecs::CodecId> codec_from_display(std::string_view name) {
  for (auto c : codecs::kAllCodecs) {
    if (codecs::codec_display_name(c) == name) return c;
  }
  return std::nullopt;
}

std::size_t query_rank(const std::string& id) {
  const auto it = std::find(kQueryIds.begin(), kQueryIds.end(), id);
  return static_cast<std::size_t>(it - kQueryIds.begin());
}

}  // namespace

std::string format_measurements(const std::vector<MeasurementRecord>& records) {
  std::string s(kRawCsvHeader);
  s += '\n';
  for (const auto& r : records) {
    s += std::to_string(r.iteration) + ',' + std::string(scenario_name(r.scenario)) + ',' +
         std::string(codecs::codec_display_name(r.codec)) + ',' + r.query_id + ',' +
         number(r.wall_seconds) + ',' + number(r.plan_seconds) + ',' +
         number(r.data_access_seconds) + ',' + number(r.io_read_seconds) + ',' +
         number(r.io_decompress_seconds) + ',' + std::to_string(r.bytes_read) + ',' +
         std::to_string(r.pages_loaded) + ',' + r.result_checksum + '\n';
  }
  return s;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.close();
  if (!f) throw IoError("write failed for " + path.string());
}

void write_measurements(const std::vector<MeasurementRecord>& records,
                        const std::filesystem::path& path) {
  write_text_file(path, format_measurements(records));
}

std::vector<MeasurementRecord> parse_measurements(std::string_view csv) {
  std::vector<MeasurementRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kRawCsvHeader) throw FormatError("line 1: unexpected measurement CSV header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 12) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 12 fields, found " +
                        std::to_string(f.size()));
    }
    MeasurementRecord r;
    r.iteration = parse_number<std::uint32_t>(f[0], line_no, "iteration");
    const auto sc = parse_scenario(f[1]);
    if (!sc) throw FormatError("line " + std::to_string(line_no) + ": bad scenario");
    r.scenario = *sc;
    const auto codec = codec_from_display(f[2]);
    if (!codec) throw FormatError("line " + std::to_string(line_no) + ": bad codec");
    r.codec = *codec;
    r.query_id = std::string(f[3]);
    r.wall_seconds = parse_number<double>(f[4], line_no, "wall_seconds");
    r.plan_seconds = parse_number<double>(f[5], line_no, "plan_seconds");
    r.data_access_seconds = parse_number<double>(f[6], line_no, "data_access_seconds");
    r.io_read_seconds = parse_number<double>(f[7], line_no, "io_read_seconds");
    r.io_decompress_seconds = parse_number<double>(f[8], line_no, "io_decompress_seconds");
    r.bytes_read = parse_number<std::uint64_t>(f[9], line_no, "bytes_read");
    r.pages_loaded = parse_number<std::uint64_t>(f[10], line_no, "pages_loaded");
    r.result_checksum = std::string(f[11]);
    out.push_back(std::move(r));
  }
  if (!header_seen) throw FormatError("empty measurement CSV");
  return out;
}

std::vector<MeasurementRecord> read_measurements(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_measurements(ss.str());
}

MeanCi mean_ci95(const std::vector<double>& x) {
  MeanCi m;
  if (x.empty()) return m;
  const double n = static_cast<double>(x.size());
  double sum = 0;
  for (double v : x) sum += v;
  m.mean = sum / n;
  if (x.size() < 2) return m;
  double ss = 0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  const double sd = std::sqrt(ss / (n - 1));
  const boost::math::students_t dist(n - 1);
  m.ci95 = boost::math::quantile(dist, 0.975) * sd / std::sqrt(n);
  return m;
}

std::vector<SummaryRow> summarize(const std::vector<MeasurementRecord>& records) {
  struct Key {
    std::size_t rank;
    std::string query;
    int codec;
    int scenario;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<const MeasurementRecord*>> groups;
  for (const auto& r : records) {
    groups[{query_rank(r.query_id), r.query_id, static_cast<int>(r.codec),
            static_cast<int>(r.scenario)}]
        .push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, recs] : groups) {
    SummaryRow row;
    row.query_id = key.query;
    row.codec = recs.front()->codec;
    row.scenario = recs.front()->scenario;
    row.n = recs.size();
    auto stat = [&](auto field) {
      std::vector<double> v;
      for (const auto* r : recs) v.push_back(static_cast<double>(field(*r)));
      return mean_ci95(v);
    };
    row.wall = stat([](const auto& r) { return r.wall_seconds; });
    row.plan = stat([](const auto& r) { return r.plan_seconds; });
    row.data_access = stat([](const auto& r) { return r.data_access_seconds; });
    row.io_read = stat([](const auto& r) { return r.io_read_seconds; });
    row.io_decompress = stat([](const auto& r) { return r.io_decompress_seconds; });
    row.bytes_read = stat([](const auto& r) { return r.bytes_read; });
    row.pages_loaded = stat([](const auto& r) { return r.pages_loaded; });
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::string s = "query_id,codec,scenario,n";
  for (const char* m : {"wall_seconds", "plan_seconds", "data_access_seconds", "io_read_seconds",
                        "io_decompress_seconds", "bytes_read", "pages_loaded"}) {
    s += std::string(",") + m + "_mean," + m + "_ci95";
  }
  s += '\n';
  for (const auto& r : rows) {
    s += r.query_id + ',' + std::string(codecs::codec_display_name(r.codec)) + ',' +
         std::string(scenario_name(r.scenario)) + ',' + std::to_string(r.n);
    for (const MeanCi* m : {&r.wall, &r.plan, &r.data_access, &r.io_read, &r.io_decompress,
                            &r.bytes_read, &r.pages_loaded}) {
      s += ',' + number(m->mean) + ',' + number(m->ci95);
    }
    s += '\n';
  }
  return s;
}

void write_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  write_text_file(path, format_summary(rows));
}

std::vector<SizeRow> size_rows(const storage::Catalog& catalog,
                               const std::vector<storage::CompressionReport>& reports) {
  std::set<std::pair<std::string, std::string>> tracked;
  for (const auto col : kCompressibleColumns) tracked.emplace(kLineorder, col);
  std::vector<SizeRow> rows;
  for (auto& stat : storage::column_stats(catalog, tracked)) {
    SizeRow row{std::move(stat), std::nullopt};
    for (const auto& rep : reports) {
      if (rep.entry.table == row.stat.table && rep.entry.column == row.stat.column) {
        row.compress_seconds = rep.wall_seconds;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_sizes(const std::vector<SizeRow>& rows) {
  std::string s(kSizesCsvHeader);
  s += '\n';
  for (const auto& r : rows) {
    // Table and column names never contain commas.
    s += r.stat.table + ',' + r.stat.column + ',' +
         (r.stat.codec ? std::string(codecs::codec_display_name(*r.stat.codec)) : "mixed") + ',' +
         std::to_string(r.stat.uncompressed_bytes) + ',' + std::to_string(r.stat.compressed_bytes) +
         ',' + number(r.stat.ratio()) + ',' +
         (r.compress_seconds ? number(*r.compress_seconds) : std::string()) + '\n';
  }
  return s;
}

}  // namespace colcrunch::ssb
