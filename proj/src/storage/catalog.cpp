#include "colcrunch/storage/catalog.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "colcrunch/error.hpp"
#include "colcrunch/storage/column_file.hpp"

namespace colcrunch::storage {

namespace {

constexpr std::size_t kFieldCount = 9;
constexpr std::string_view kColumnHeader =
    "# table\tcolumn\ttype\tcodec\tpath\tvalues_per_page\ttotal_values\tcompressed_file_size\t"
    "uncompressed_size";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line_no, std::string_view field) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError("catalog line " + std::to_string(line_no) + ": bad " + std::string(field) +
                      " '" + std::string(s) + "'");
  }
  return value;
}

[[noreturn]] void throw_errno(const std::string& what, const std::filesystem::path& p) {
  throw IoError(what + " " + p.string() + ": " + std::strerror(errno));
}

}  // namespace

std::string_view value_type_name(ValueType t) { return t == ValueType::U32 ? "u32" : "raw-bytes"; }

std::optional<ValueType> parse_value_type(std::string_view name) {
  if (name == "u32") return ValueType::U32;
  if (name == "raw-bytes") return ValueType::Bytes;
  return std::nullopt;
}

std::uint64_t CatalogEntry::total_pages() const {
  if (values_per_page == 0) return 0;
  return (total_values + values_per_page - 1) / values_per_page;
}

std::uint64_t CatalogEntry::payload_bytes() const {
  const std::uint64_t meta = metadata_size(total_pages());
  return compressed_file_size > meta ? compressed_file_size - meta : 0;
}

Catalog Catalog::parse(std::string_view text, std::filesystem::path base_dir) {
  Catalog catalog(std::move(base_dir));
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kCatalogHeader) {
        throw FormatError("catalog line 1: expected '" + std::string(kCatalogHeader) + "'");
      }
      continue;
    }
    if (line.empty() || line.front() == '#') continue;

    const auto f = split_tabs(line);
    if (f.size() != kFieldCount) {
      throw FormatError("catalog line " + std::to_string(line_no) + ": expected " +
                        std::to_string(kFieldCount) + " tab-separated fields, got " +
                        std::to_string(f.size()));
    }
    CatalogEntry e;
    e.table = std::string(f[0]);
    e.column = std::string(f[1]);
    if (e.table.empty() || e.column.empty()) {
      throw FormatError("catalog line " + std::to_string(line_no) + ": empty table or column");
    }
    const auto type = parse_value_type(f[2]);
    if (!type) {
      throw FormatError("catalog line " + std::to_string(line_no) + ": unknown type '" +
                        std::string(f[2]) + "'");
    }
    e.type = *type;
    const auto codec = codecs::parse_codec_name(f[3]);
    if (!codec) {
      throw FormatError("catalog line " + std::to_string(line_no) + ": unknown codec '" +
                        std::string(f[3]) + "'");
    }
    e.codec = *codec;
    e.path = std::string(f[4]);
    e.values_per_page = parse_number<std::uint32_t>(f[5], line_no, "values_per_page");
    e.total_values = parse_number<std::uint64_t>(f[6], line_no, "total_values");
    e.compressed_file_size = parse_number<std::uint64_t>(f[7], line_no, "compressed_file_size");
    e.uncompressed_size = parse_number<std::uint64_t>(f[8], line_no, "uncompressed_size");
    if (!seen.emplace(e.table, e.column).second) {
      throw FormatError("catalog line " + std::to_string(line_no) + ": duplicate column " +
                        e.table + "." + e.column);
    }
    catalog.entries_.push_back(std::move(e));
  }
  if (line_no == 0) throw FormatError("catalog line 1: missing header");
  return catalog;
}

Catalog Catalog::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open catalog " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), file.parent_path());
}

std::string Catalog::serialize() const {
  std::string out;
  out += kCatalogHeader;
  out += '\n';
  out += kColumnHeader;
  out += '\n';
  for (const auto& e : entries_) {
    out += e.table + '\t' + e.column + '\t' + std::string(value_type_name(e.type)) + '\t' +
           std::string(codecs::codec_name(e.codec)) + '\t' + e.path + '\t' +
           std::to_string(e.values_per_page) + '\t' + std::to_string(e.total_values) + '\t' +
           std::to_string(e.compressed_file_size) + '\t' + std::to_string(e.uncompressed_size) +
           '\n';
  }
  return out;
}

void Catalog::save(const std::filesystem::path& file) const {
  write_file_atomically(file, serialize());
}

const CatalogEntry* Catalog::find(std::string_view table, std::string_view column) const {
  for (const auto& e : entries_) {
    if (e.table == table && e.column == column) return &e;
  }
  return nullptr;
}

const CatalogEntry& Catalog::at(std::string_view table, std::string_view column) const {
  if (const auto* e = find(table, column)) return *e;
  throw NotFoundError("unknown column " + std::string(table) + "." + std::string(column));
}

void Catalog::upsert(CatalogEntry entry) {
  for (auto& e : entries_) {
    if (e.table == entry.table && e.column == entry.column) {
      e = std::move(entry);
      return;
    }
  }
  entries_.push_back(std::move(entry));
}

std::vector<std::string> Catalog::tables() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (std::find(out.begin(), out.end(), e.table) == out.end()) out.push_back(e.table);
  }
  return out;
}

std::vector<const CatalogEntry*> Catalog::columns_of(std::string_view table) const {
  std::vector<const CatalogEntry*> out;
  for (const auto& e : entries_) {
    if (e.table == table) out.push_back(&e);
  }
  return out;
}

std::filesystem::path Catalog::resolve(const CatalogEntry& entry) const {
  const std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : base_dir_ / p;
}

void write_file_atomically(const std::filesystem::path& file, std::string_view content) {
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("cannot create", tmp);
  std::size_t done = 0;
  while (done < content.size()) {
    const ssize_t n = ::write(fd, content.data() + done, content.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw_errno("write failed on", tmp);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw_errno("fsync failed on", tmp);
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + file.string() + ": " + ec.message());
  const auto dir = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

}  // namespace colcrunch::storage
