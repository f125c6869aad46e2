#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "colcrunch/cli/cli.hpp"
#include "support/temp_dir.hpp"

using namespace colcrunch;
using namespace colcrunch::cli;
using testing::TempDir;

namespace {

struct Outcome {
  ParseResult parsed;
  std::string out, err;
};

Outcome parse(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o{parse_args(args, out, err), {}, {}};
  o.out = out.str();
  o.err = err.str();
  return o;
}

struct Run {
  int code = -1;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  const auto p = parse_args(args, out, err);
  r.code = p.command ? dispatch(*p.command, out, err) : p.exit_code;
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("parse gen") {
  ::unsetenv("COLCRUNCH_DATA_DIR");
  const auto o = parse({"gen", "--sf", "0.1", "--seed", "42", "--data-dir", "d"});
  REQUIRE(o.parsed.command);
  const auto& c = *o.parsed.command;
  CHECK(c.sub == Subcommand::Gen);
  CHECK(c.scale_factor == 0.1);
  CHECK(c.seed == 42);
  CHECK(c.data_dir == "d");
  CHECK_FALSE(c.force);
}

TEST_CASE("parallel bench forces one I/O thread") {
  const auto o = parse({"bench", "--codec", "brotli", "--scenario", "parallel", "--data-dir", "d",
                        "--io-threads", "4"});
  REQUIRE(o.parsed.command);
  const auto& c = *o.parsed.command;
  CHECK(c.sub == Subcommand::Bench);
  CHECK(c.codec == codecs::CodecId::Brotli);
  CHECK(c.scenario == ssb::Scenario::Parallel);
  CHECK(c.io_threads == 1);
  CHECK(c.bench_config().io_threads == 1);
  CHECK(c.workers == 13);
  CHECK(c.out_dir == "results");
}

TEST_CASE("bench defaults") {
  const auto o = parse({"bench", "--data-dir", "d"});
  REQUIRE(o.parsed.command);
  const auto cfg = o.parsed.command->bench_config();
  CHECK(cfg.iterations == 10);
  CHECK(cfg.buffer_pages == 16384);
  CHECK(cfg.io_threads == 2);
  CHECK(cfg.prefetch_window == 4);
  CHECK(cfg.codec == codecs::CodecId::Raw);
  CHECK(o.parsed.command->simd);
  CHECK(parse({"bench", "--data-dir", "d", "--simd", "off"}).parsed.command->simd == false);
}

TEST_CASE("usage errors exit 2") {
  const auto bad_codec = parse({"compress", "--codec", "nope", "--data-dir", "d"});
  CHECK_FALSE(bad_codec.parsed.command);
  CHECK(bad_codec.parsed.exit_code == kExitUsage);
  for (const char* name : {"raw", "vbyte", "pfor", "fastpfor128", "binpack128", "brotli"}) {
    CHECK(bad_codec.err.find(name) != std::string::npos);
  }

  ::unsetenv("COLCRUNCH_DATA_DIR");
  CHECK(parse({"stats"}).parsed.exit_code == kExitUsage);
  CHECK(parse({}).parsed.exit_code == kExitUsage);
  CHECK(parse({"frobnicate"}).parsed.exit_code == kExitUsage);
  CHECK(parse({"gen", "--data-dir", "d", "--bogus"}).parsed.exit_code == kExitUsage);
  CHECK(parse({"gen", "--data-dir", "d", "--sf", "-1"}).parsed.exit_code == kExitUsage);
  CHECK(parse({"gen", "--data-dir", "d", "--sf", "abc"}).parsed.exit_code == kExitUsage);
  CHECK(parse({"bench", "--data-dir", "d", "--scenario", "both"}).parsed.exit_code == kExitUsage);
  CHECK(parse({"bench", "--data-dir", "d", "--simd", "maybe"}).parsed.exit_code == kExitUsage);
  CHECK(parse({"bench", "--data-dir", "d", "--iterations", "0"}).parsed.exit_code == kExitUsage);
  // flags belong to their subcommand
  CHECK(parse({"stats", "--data-dir", "d", "--codec", "raw"}).parsed.exit_code == kExitUsage);
}

TEST_CASE("--help succeeds and prints usage") {
  const auto top = parse({"--help"});
  CHECK_FALSE(top.parsed.command);
  CHECK(top.parsed.exit_code == kExitOk);
  CHECK(top.out.find("bench") != std::string::npos);
  const auto sub = parse({"bench", "--help"});
  CHECK(sub.parsed.exit_code == kExitOk);
  CHECK(sub.out.find("--drop-caches-cmd") != std::string::npos);
}

TEST_CASE("data dir falls back to the environment") {
  ::setenv("COLCRUNCH_DATA_DIR", "/tmp/from-env", 1);
  const auto o = parse({"stats"});
  REQUIRE(o.parsed.command);
  CHECK(o.parsed.command->data_dir == "/tmp/from-env");
  const auto flag = parse({"stats", "--data-dir", "x"});
  CHECK(flag.parsed.command->data_dir == "x");
  ::unsetenv("COLCRUNCH_DATA_DIR");
}

TEST_CASE("gen, stats, compress, bench and export") {
  TempDir t;
  const auto data = (t.path() / "data").string();
  const auto results = (t.path() / "results").string();

  auto gen = run_cli({"gen", "--sf", "0.001", "--seed", "5", "--data-dir", data, "--page-size",
                      "4096"});
  CHECK(gen.code == kExitOk);
  CHECK(gen.out.find("generated 6000 lineorder rows") != std::string::npos);

  SUBCASE("gen refuses a populated directory without --force") {
    const auto again = run_cli({"gen", "--sf", "0.001", "--data-dir", data});
    CHECK(again.code == kExitRuntime);
    CHECK(again.err.find(data) != std::string::npos);
    CHECK(run_cli({"gen", "--sf", "0.001", "--data-dir", data, "--force"}).code == kExitOk);
  }

  SUBCASE("stats before compression shows ratio 1 everywhere") {
    const auto s = run_cli({"stats", "--data-dir", data});
    CHECK(s.code == kExitOk);
    std::istringstream lines(s.out);
    std::string line;
    std::getline(lines, line);
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      if (line.rfind("lineorder\t", 0) != 0 || line.find("\tu32") != std::string::npos) continue;
      if (line.find("(over") != std::string::npos) continue;
      if (line.find("lo_orderpriority") != std::string::npos ||
          line.find("lo_shipmode") != std::string::npos) {
        continue;
      }
      ++rows;
      CHECK(line.substr(line.rfind('\t') + 1) == "1");
    }
    CHECK(rows == 15);
    CHECK(s.out.find("compression ratio 1\n") != std::string::npos);
  }

  SUBCASE("compress then stats reports the over-columns row") {
    const auto c = run_cli({"compress", "--codec", "fastpfor128", "--data-dir", data, "--out-dir",
                            results});
    CHECK(c.code == kExitOk);
    CHECK(c.out.find("compressed 10 lineorder columns") != std::string::npos);
    CHECK(std::filesystem::exists(t.path() / "results" / "sizes_fastpfor128_latest.csv"));
    const auto s = run_cli({"stats", "--data-dir", data});
    CHECK(s.out.find("lineorder\t(over columns)\tfastpfor128\t") != std::string::npos);
    CHECK(s.out.find("lineorder\t(over the whole table)\tmixed\t") != std::string::npos);
  }

  SUBCASE("bench writes raw, summary and latest copies; export is idempotent") {
    const auto b = run_cli({"bench", "--codec", "vbyte", "--iterations", "2", "--data-dir", data,
                            "--out-dir", results, "--buffer-pages", "256"});
    REQUIRE(b.code == kExitOk);
    CHECK(b.err.find("recompressed 10") != std::string::npos);
    const auto dir = t.path() / "results";
    const auto raw = slurp(dir / "raw_vbyte_sequential_latest.csv");
    CHECK(std::count(raw.begin(), raw.end(), '\n') == 1 + 26);
    CHECK(std::filesystem::exists(dir / "summary_vbyte_sequential_latest.csv"));
    CHECK(std::filesystem::exists(dir / "sizes_vbyte_latest.csv"));

    const auto p = run_cli({"bench", "--codec", "vbyte", "--scenario", "parallel", "--iterations",
                            "1", "--data-dir", data, "--out-dir", results});
    REQUIRE(p.code == kExitOk);

    CHECK(run_cli({"export", "--data-dir", data, "--out-dir", results}).code == kExitOk);
    const auto first = slurp(dir / "summary_all_latest.csv");
    const auto sizes = slurp(dir / "sizes_current.csv");
    const auto e = run_cli({"export", "--data-dir", data, "--out-dir", results});
    CHECK(e.code == kExitOk);
    CHECK(e.out.find("39 records from 2 runs") != std::string::npos);
    CHECK(slurp(dir / "summary_all_latest.csv") == first);
    CHECK(slurp(dir / "sizes_current.csv") == sizes);
  }
}

TEST_CASE("missing dataset is a runtime error naming the path") {
  TempDir t;
  const auto missing = (t.path() / "nowhere").string();
  for (const char* sub : {"bench", "stats", "compress", "export"}) {
    CAPTURE(sub);
    std::vector<std::string> args{sub, "--data-dir", missing};
    if (std::string(sub) != "stats") {
      args.push_back("--out-dir");
      args.push_back((t.path() / "r").string());
    }
    const auto r = run_cli(args);
    CHECK(r.code == kExitRuntime);
    CHECK(r.err.find(missing) != std::string::npos);
  }
}
