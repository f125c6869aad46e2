#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "colcrunch/codecs/codec.hpp"
#include "colcrunch/ssb/bench.hpp"

namespace colcrunch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

enum class Subcommand { Gen, Compress, Bench, Stats, Export };

struct Command {
  Subcommand sub = Subcommand::Stats;
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "results";
  double scale_factor = 0.1;
  std::uint64_t seed = 42;
  codecs::CodecId codec = codecs::CodecId::Raw;
  ssb::Scenario scenario = ssb::Scenario::Sequential;
  std::uint32_t iterations = 10;
  std::uint32_t page_size = 65536;
  std::uint32_t buffer_pages = 16384;
  std::uint32_t io_threads = 2;
  std::uint32_t workers = 13;
  std::uint32_t prefetch_window = 4;
  std::string drop_caches_cmd;
  bool simd = true;
  bool force = false;

  ssb::BenchConfig bench_config() const;
};

struct ParseResult {
  std::optional<Command> command;  // empty when the process should exit
  int exit_code = kExitOk;
};

/// Parses argv (without the program name). Usage errors print a message to
/// `err` and give kExitUsage; --help prints to `out` and gives kExitOk.
/// COLCRUNCH_DATA_DIR supplies --data-dir when the flag is absent.
ParseResult parse_args(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err);

/// Runs the command. Module errors are reported on `err` with kExitRuntime.
int dispatch(const Command& command, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace colcrunch::cli
