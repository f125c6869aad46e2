#pragma once

// Deterministic star-schema data generator. Keys are 1-based and dense in
// every dimension; dates are yyyymmdd integers.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "colcrunch/storage/catalog.hpp"
#include "colcrunch/storage/operations.hpp"

namespace colcrunch::ssb {

inline constexpr std::string_view kLineorder = "lineorder";
inline constexpr std::string_view kDate = "date";
inline constexpr std::string_view kCustomer = "customer";
inline constexpr std::string_view kSupplier = "supplier";
inline constexpr std::string_view kPart = "part";

inline constexpr std::uint64_t kDateRows = 2556;

/// The LINEORDER integer columns that take the benchmark codec.
inline constexpr std::array<std::string_view, 10> kCompressibleColumns = {
    "lo_custkey",   "lo_partkey",       "lo_suppkey",       "lo_orderdate", "lo_quantity",
    "lo_extendedprice", "lo_ordtotalprice", "lo_discount", "lo_revenue",   "lo_supplycost"};

struct RowCounts {
  std::uint64_t lineorder = 0;
  std::uint64_t customer = 0;
  std::uint64_t supplier = 0;
  std::uint64_t part = 0;
  std::uint64_t date = kDateRows;
};

/// Throws ContractError unless scale_factor > 0.
RowCounts row_counts(double scale_factor);

struct TableData {
  std::string name;
  std::vector<std::pair<std::string, storage::ColumnData>> columns;

  std::uint64_t rows() const;
  const storage::ColumnData& column(std::string_view name) const;
  const std::vector<std::uint32_t>& u32(std::string_view name) const;
  const std::vector<std::string>& strings(std::string_view name) const;
};

struct SsbDataset {
  std::vector<TableData> tables;  // lineorder, date, customer, supplier, part

  const TableData& table(std::string_view name) const;
};

/// Pure function of (scale_factor, seed).
SsbDataset generate(double scale_factor, std::uint64_t seed);

/// Writes every column Raw into `out_dir` and saves the catalog there.
storage::Catalog write_dataset(const SsbDataset& data, const std::filesystem::path& out_dir,
                               std::uint32_t page_size_bytes = 65536);

/// generate + write_dataset. A non-empty `out_dir` is refused with IoError
/// unless `force`, in which case earlier column files and the catalog are
/// removed first.
storage::Catalog generate_dataset(double scale_factor, std::uint64_t seed,
                                  const std::filesystem::path& out_dir,
                                  std::uint32_t page_size_bytes = 65536, bool force = false);

/// Recompresses the ten LINEORDER integer columns with `codec`; columns that
/// already use it are skipped. Saves the catalog after each column.
std::vector<storage::CompressionReport> compress_lineorder(const std::filesystem::path& data_dir,
                                                           codecs::CodecId codec,
                                                           bool force = false);

/// Codec shared by all ten columns, or nullopt when they differ.
std::optional<codecs::CodecId> lineorder_codec(const storage::Catalog& catalog);

}  // namespace colcrunch::ssb
