#include "colcrunch/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iostream>

#include "colcrunch/error.hpp"
#include "colcrunch/exec/database.hpp"
#include "colcrunch/ssb/dataset.hpp"

namespace colcrunch::cli {

namespace fs = std::filesystem;

namespace {

std::string valid_codecs() {
  std::string s;
  for (auto c : codecs::kAllCodecs) {
    if (!s.empty()) s += ", ";
    s += codecs::codec_name(c);
  }
  return s;
}

std::string algorithm_of(codecs::CodecId c) {
  if (c == codecs::CodecId::Brotli) return "Brotli 1.1.0 (quality 11, window 22)";
  return std::string(codecs::codec_display_name(c));
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

// Writes `text` to <dir>/<stem>_<timestamp>.csv and <dir>/<stem>_latest.csv.
fs::path write_pair(const fs::path& dir, const std::string& stem, const std::string& stamp,
                    std::string_view text) {
  const fs::path stamped = dir / (stem + "_" + stamp + ".csv");
  ssb::write_text_file(stamped, text);
  ssb::write_text_file(dir / (stem + "_latest.csv"), text);
  return stamped;
}

std::set<std::pair<std::string, std::string>> tracked_columns() {
  std::set<std::pair<std::string, std::string>> t;
  for (auto c : ssb::kCompressibleColumns) t.emplace(ssb::kLineorder, c);
  return t;
}

storage::Catalog load_catalog(const fs::path& dir) {
  const auto file = dir / storage::kCatalogFileName;
  if (!fs::exists(file)) {
    throw IoError("no dataset at " + dir.string() + " (missing catalog.txt)");
  }
  return storage::Catalog::load(file);
}

int run_gen(const Command& c, std::ostream& out) {
  const auto catalog =
      ssb::generate_dataset(c.scale_factor, c.seed, c.data_dir, c.page_size, c.force);
  out << "generated " << catalog.at(ssb::kLineorder, "lo_orderkey").total_values
      << " lineorder rows (sf " << c.scale_factor << ", seed " << c.seed << ") in "
      << c.data_dir.string() << "\n";
  return kExitOk;
}

int run_compress(const Command& c, std::ostream& out) {
  load_catalog(c.data_dir);
  const auto reports = ssb::compress_lineorder(c.data_dir, c.codec, c.force);
  const auto catalog = load_catalog(c.data_dir);
  const auto rows = ssb::size_rows(catalog, reports);
  const auto path = write_pair(c.out_dir, "sizes_" + std::string(codecs::codec_name(c.codec)),
                               timestamp(), ssb::format_sizes(rows));
  std::uint64_t before = 0, after = 0;
  for (const auto& r : rows) {
    if (r.stat.table == ssb::kLineorder && r.stat.column == storage::kOverColumns) {
      before = r.stat.uncompressed_bytes;
      after = r.stat.compressed_bytes;
    }
  }
  out << "compressed " << reports.size() << " lineorder columns with "
      << codecs::codec_name(c.codec) << ": " << before << " -> " << after << " bytes (saved "
      << (before > after ? before - after : 0) << "); sizes in " << path.string() << "\n";
  return kExitOk;
}

int run_bench(const Command& c, std::ostream& out, std::ostream& err) {
  load_catalog(c.data_dir);
  codecs::set_decode_path(c.simd ? codecs::DecodePath::Vectorized : codecs::DecodePath::Scalar);
  const auto cfg = c.bench_config();
  const std::string tag = std::string(codecs::codec_name(c.codec)) + "_" +
                          std::string(ssb::scenario_name(cfg.scenario));
  const std::string stamp = timestamp();

  const auto reports = ssb::compress_lineorder(c.data_dir, c.codec);
  if (!reports.empty()) {
    err << "note: recompressed " << reports.size() << " lineorder columns with "
        << codecs::codec_name(c.codec) << "\n";
    write_pair(c.out_dir, "sizes_" + std::string(codecs::codec_name(c.codec)), stamp,
               ssb::format_sizes(ssb::size_rows(load_catalog(c.data_dir), reports)));
  }

  auto db = exec::Database::open(c.data_dir, cfg.buffer_config());
  ssb::ChecksumRegistry registry;
  const auto res = ssb::run_iterations(cfg, *db, registry);
  for (const auto& w : res.warnings) err << "warning: " << w << "\n";
  if (res.cache_mode == "warm-OS-cache") {
    err << "warning: OS page cache could not be dropped; results are warm-OS-cache\n";
  }

  const auto raw = write_pair(c.out_dir, "raw_" + tag, stamp, ssb::format_measurements(res.records));
  const auto summary = write_pair(c.out_dir, "summary_" + tag, stamp,
                                  ssb::format_summary(ssb::summarize(res.records)));
  std::string meta;
  meta += "codec=" + std::string(codecs::codec_display_name(c.codec)) + "\n";
  meta += "algorithm=" + algorithm_of(c.codec) + "\n";
  meta += "scenario=" + std::string(ssb::scenario_name(cfg.scenario)) + "\n";
  meta += "iterations=" + std::to_string(cfg.iterations) + "\n";
  meta += "io_threads=" + std::to_string(cfg.buffer_config().io_threads) + "\n";
  meta += "workers=" + std::to_string(cfg.scenario == ssb::Scenario::Parallel ? cfg.worker_threads : 1) + "\n";
  meta += "buffer_pages=" + std::to_string(cfg.buffer_pages) + "\n";
  meta += "prefetch_window=" + std::to_string(cfg.prefetch_window) + "\n";
  meta += "simd=" + std::string(c.simd ? "on" : "off") + "\n";
  meta += "cache_mode=" + res.cache_mode + "\n";
  for (const auto& w : res.warnings) meta += "warning=" + w + "\n";
  ssb::write_text_file(c.out_dir / ("run_" + tag + "_" + stamp + ".txt"), meta);

  out << "wrote " << res.records.size() << " records to " << raw.string() << " and "
      << summary.string() << " (cache: " << res.cache_mode << ")\n";
  return kExitOk;
}

int run_stats(const Command& c, std::ostream& out) {
  const auto catalog = load_catalog(c.data_dir);
  const auto stats = storage::column_stats(catalog, tracked_columns());
  out << "table\tcolumn\tcodec\tuncompressed_bytes\tcompressed_bytes\tratio\n";
  double over = 0;
  for (const auto& s : stats) {
    out << s.table << '\t' << s.column << '\t'
        << (s.codec ? std::string(codecs::codec_name(*s.codec)) : std::string("mixed")) << '\t'
        << s.uncompressed_bytes << '\t' << s.compressed_bytes << '\t' << s.ratio() << '\n';
    if (s.table == ssb::kLineorder && s.column == storage::kOverColumns) over = s.ratio();
  }
  out << "lineorder integer columns: compression ratio " << over << "\n";
  return kExitOk;
}

int run_export(const Command& c, std::ostream& out) {
  const auto catalog = load_catalog(c.data_dir);
  const auto sizes = c.out_dir / "sizes_current.csv";
  ssb::write_text_file(sizes, ssb::format_sizes(ssb::size_rows(catalog)));

  std::vector<fs::path> raws;
  if (fs::is_directory(c.out_dir)) {
    for (const auto& e : fs::directory_iterator(c.out_dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("raw_", 0) == 0 && name.size() > 11 &&
          name.substr(name.size() - 11) == "_latest.csv") {
        raws.push_back(e.path());
      }
    }
  }
  std::sort(raws.begin(), raws.end());
  std::vector<ssb::MeasurementRecord> records;
  for (const auto& p : raws) {
    auto r = ssb::read_measurements(p);
    records.insert(records.end(), r.begin(), r.end());
  }
  const auto summary = c.out_dir / "summary_all_latest.csv";
  ssb::write_text_file(summary, ssb::format_summary(ssb::summarize(records)));
  out << "exported sizes to " << sizes.string() << " and a summary of " << records.size()
      << " records from " << raws.size() << " runs to " << summary.string() << "\n";
  return kExitOk;
}

}  // namespace

ssb::BenchConfig Command::bench_config() const {
  ssb::BenchConfig b;
  b.scale_factor = scale_factor;
  b.codec = codec;
  b.scenario = scenario;
  b.iterations = iterations;
  b.page_size_bytes = page_size;
  b.buffer_pages = buffer_pages;
  b.io_threads = io_threads;
  b.worker_threads = workers;
  b.prefetch_window = prefetch_window;
  b.seed = seed;
  b.drop_caches_cmd = drop_caches_cmd;
  b.normalize();
  return b;
}

ParseResult parse_args(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  Command cmd;
  std::string codec = "raw";
  std::string scenario = "sequential";
  std::string simd = "on";
  std::string data_dir;
  std::string out_dir = cmd.out_dir.string();

  CLI::App app{"Columnar storage engine with compressed pages and a star-schema benchmark",
               "colcrunch"};
  app.require_subcommand(1);

  auto data_dir_opt = [&](CLI::App* s) {
    s->add_option("--data-dir", data_dir, "Dataset directory")
        ->envname("COLCRUNCH_DATA_DIR")
        ->required();
  };
  auto out_dir_opt = [&](CLI::App* s) {
    s->add_option("--out-dir", out_dir, "Directory for CSV output")->capture_default_str();
  };
  auto codec_opt = [&](CLI::App* s) {
    s->add_option("--codec", codec, "Codec: " + valid_codecs())->capture_default_str();
  };
  auto page_opt = [&](CLI::App* s) {
    s->add_option("--page-size", cmd.page_size, "Page size in bytes")
        ->check(CLI::Range(64u, 1u << 26))
        ->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen", "Generate a star-schema dataset");
  data_dir_opt(gen);
  gen->add_option("--sf", cmd.scale_factor, "Scale factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--seed", cmd.seed, "Generator seed")->capture_default_str();
  page_opt(gen);
  gen->add_flag("--force", cmd.force, "Overwrite a non-empty directory");

  auto* compress = app.add_subcommand("compress", "Recompress the lineorder integer columns");
  data_dir_opt(compress);
  out_dir_opt(compress);
  codec_opt(compress);
  compress->add_flag("--force", cmd.force, "Recompress columns already using the codec");

  auto* bench = app.add_subcommand("bench", "Run the benchmark protocol");
  data_dir_opt(bench);
  out_dir_opt(bench);
  codec_opt(bench);
  bench->add_option("--scenario", scenario, "sequential or parallel")
      ->check(CLI::IsMember({"sequential", "parallel"}))
      ->capture_default_str();
  bench->add_option("--iterations", cmd.iterations, "Measured iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", cmd.seed, "Shuffle seed")->capture_default_str();
  bench->add_option("--buffer-pages", cmd.buffer_pages, "Buffer capacity in pages")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--io-threads", cmd.io_threads, "I/O threads (parallel forces 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--workers", cmd.workers, "Worker threads in the parallel scenario")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--prefetch-window", cmd.prefetch_window, "Pages prefetched ahead")
      ->capture_default_str();
  bench->add_option("--drop-caches-cmd", cmd.drop_caches_cmd,
                    "Shell command run after each iteration to drop OS caches");
  bench->add_option("--simd", simd, "Vectorized decoding")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();

  auto* stats = app.add_subcommand("stats", "Print per-column compression statistics");
  data_dir_opt(stats);

  auto* exp = app.add_subcommand("export", "Write size and summary CSVs for reporting");
  data_dir_opt(exp);
  out_dir_opt(exp);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return {std::nullopt, kExitOk};
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return {std::nullopt, kExitOk};
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return {std::nullopt, kExitUsage};
  }

  const auto parsed_codec = codecs::parse_codec_name(codec);
  if (!parsed_codec) {
    err << "error: unknown codec '" << codec << "' (valid codecs: " << valid_codecs() << ")\n";
    return {std::nullopt, kExitUsage};
  }
  cmd.codec = *parsed_codec;
  cmd.scenario = *ssb::parse_scenario(scenario);
  cmd.simd = simd == "on";
  cmd.data_dir = data_dir;
  cmd.out_dir = out_dir;
  if (cmd.scenario == ssb::Scenario::Parallel) cmd.io_threads = 1;

  if (gen->parsed()) cmd.sub = Subcommand::Gen;
  if (compress->parsed()) cmd.sub = Subcommand::Compress;
  if (bench->parsed()) cmd.sub = Subcommand::Bench;
  if (stats->parsed()) cmd.sub = Subcommand::Stats;
  if (exp->parsed()) cmd.sub = Subcommand::Export;
  return {cmd, kExitOk};
}

int dispatch(const Command& c, std::ostream& out, std::ostream& err) {
  try {
    switch (c.sub) {
      case Subcommand::Gen: return run_gen(c, out);
      case Subcommand::Compress: return run_compress(c, out);
      case Subcommand::Bench: return run_bench(c, out, err);
      case Subcommand::Stats: return run_stats(c, out);
      case Subcommand::Export: return run_export(c, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto parsed = parse_args(args, std::cout, std::cerr);
  if (!parsed.command) return parsed.exit_code;
  return dispatch(*parsed.command, std::cout, std::cerr);
}

}  // namespace colcrunch::cli
