#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "colcrunch/codecs/codec.hpp"
#include "colcrunch/exec/database.hpp"
#include "colcrunch/storage/operations.hpp"

namespace colcrunch::ssb {

enum class Scenario { Sequential, Parallel };

std::string_view scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

struct BenchConfig {
  double scale_factor = 0.1;
  codecs::CodecId codec = codecs::CodecId::Raw;
  Scenario scenario = Scenario::Sequential;
  std::uint32_t iterations = 10;
  std::uint32_t page_size_bytes = 65536;
  std::uint32_t buffer_pages = 16384;
  std::uint32_t io_threads = 2;
  std::uint32_t worker_threads = 13;
  std::uint32_t prefetch_window = 4;
  std::uint64_t seed = 42;
  std::string drop_caches_cmd;
  std::vector<std::string> queries;  // empty selects all 13
  /// Empties the buffer before every measured query. Used for per-query
  /// volume analysis; off in the normal protocol.
  bool cold_per_query = false;

  /// Forces io_threads = 1 for the parallel scenario.
  void normalize();
  buffer::BufferConfig buffer_config() const;
  std::vector<std::string> query_set() const;
};

struct MeasurementRecord {
  std::uint32_t iteration = 0;
  Scenario scenario = Scenario::Sequential;
  codecs::CodecId codec = codecs::CodecId::Raw;
  std::string query_id;
  double wall_seconds = 0;
  double plan_seconds = 0;
  double data_access_seconds = 0;
  double io_read_seconds = 0;
  double io_decompress_seconds = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t pages_loaded = 0;
  std::string result_checksum;

  bool operator==(const MeasurementRecord&) const = default;
};

/// Expected checksum per query id, shared across runs so that every codec
/// assignment is checked against the first answer seen.
class ChecksumRegistry {
 public:
  /// Records the checksum on first sight; throws Error on a mismatch.
  void check(const std::string& query_id, const std::string& checksum,
             std::string_view context);
  std::map<std::string, std::string> snapshot() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> expected_;
};

struct ScenarioRun {
  std::vector<MeasurementRecord> records;  // in completion order
  /// Submission and completion offsets per record, seconds since run start.
  std::vector<double> submitted_at;
  std::vector<double> completed_at;
  std::vector<std::vector<buffer::TracedLoad>> traces;
};

/// Executes `order` once under the configured scenario. Every result is
/// checked against `registry`. A failing query aborts the run with an Error
/// naming it.
ScenarioRun run_scenario(const BenchConfig& config, exec::Database& db,
                         const std::vector<std::string>& order, std::uint32_t iteration,
                         ChecksumRegistry& registry);

/// Seeded Fisher-Yates shuffle of `queries`.
std::vector<std::string> shuffled(std::vector<std::string> queries, std::uint64_t seed);
/// Seed used for the shuffle of `iteration`.
std::uint64_t iteration_seed(std::uint64_t seed, std::uint32_t iteration);

struct IterationsResult {
  std::vector<MeasurementRecord> records;  // measured passes only
  std::map<std::string, std::uint32_t> executions;  // per query, warm-up included
  std::vector<std::vector<std::string>> orders;     // per iteration
  std::string cache_mode;                           // hook, fadvise-dontneed or warm-OS-cache
  std::vector<std::string> warnings;
  buffer::IoStats io_totals;  // I/O thread totals, warm-up passes included
  double measured_wall_seconds = 0;
};

/// Per iteration: shuffle, warm-up pass, measured pass, cache drop, buffer
/// clear and stats reset.
IterationsResult run_iterations(const BenchConfig& config, exec::Database& db,
                                ChecksumRegistry& registry);

// --------------------------------------------------------------- CSV output

inline constexpr std::string_view kRawCsvHeader =
    "iteration,scenario,codec,query_id,wall_seconds,plan_seconds,data_access_seconds,"
    "io_read_seconds,io_decompress_seconds,bytes_read,pages_loaded,result_checksum";

void write_measurements(const std::vector<MeasurementRecord>& records,
                        const std::filesystem::path& path);
std::string format_measurements(const std::vector<MeasurementRecord>& records);
/// Throws FormatError naming the line and column on malformed input.
std::vector<MeasurementRecord> parse_measurements(std::string_view csv);
std::vector<MeasurementRecord> read_measurements(const std::filesystem::path& path);

struct MeanCi {
  double mean = 0;
  double ci95 = 0;  // t-distribution half-width; 0 for fewer than two samples
};

MeanCi mean_ci95(const std::vector<double>& samples);

struct SummaryRow {
  std::string query_id;
  codecs::CodecId codec = codecs::CodecId::Raw;
  Scenario scenario = Scenario::Sequential;
  std::size_t n = 0;
  MeanCi wall, plan, data_access, io_read, io_decompress, bytes_read, pages_loaded;
};

/// One row per (query_id, codec, scenario), in query order.
std::vector<SummaryRow> summarize(const std::vector<MeasurementRecord>& records);
std::string format_summary(const std::vector<SummaryRow>& rows);
void write_summary(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

inline constexpr std::string_view kSizesCsvHeader =
    "table,column,codec,uncompressed_bytes,compressed_bytes,ratio,compress_seconds";

struct SizeRow {
  storage::ColumnStat stat;
  std::optional<double> compress_seconds;
};

/// Size rows for the catalog, with compression times where a report exists.
std::vector<SizeRow> size_rows(const storage::Catalog& catalog,
                               const std::vector<storage::CompressionReport>& reports = {});
std::string format_sizes(const std::vector<SizeRow>& rows);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace colcrunch::ssb
