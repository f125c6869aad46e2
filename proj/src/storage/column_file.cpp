#include "colcrunch/storage/column_file.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <utility>

#include "colcrunch/error.hpp"

namespace colcrunch::storage {

namespace {

[[noreturn]] void throw_errno(const std::string& what, const std::filesystem::path& p) {
  throw IoError(what + " " + p.string() + ": " + std::strerror(errno));
}

template <typename T>
void put_le(std::uint8_t* dst, T v) {
  std::memcpy(dst, &v, sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* src) {
  T v;
  std::memcpy(&v, src, sizeof(T));
  return v;
}

void pwrite_all(int fd, const void* data, std::size_t len, std::uint64_t offset,
                const std::filesystem::path& p) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  while (len > 0) {
    const ssize_t n = ::pwrite(fd, bytes, len, static_cast<off_t>(offset));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write failed on", p);
    }
    bytes += n;
    len -= static_cast<std::size_t>(n);
    offset += static_cast<std::uint64_t>(n);
  }
}

std::vector<std::uint8_t> encode_metadata(const ColumnFileHeader& h,
                                          const std::vector<PageIndexEntry>& index) {
  std::vector<std::uint8_t> out(metadata_size(index.size()), 0);
  std::memcpy(out.data(), kMagic.data(), kMagic.size());
  out[4] = h.format_version;
  out[5] = codecs::codec_to_byte(h.codec);
  out[6] = static_cast<std::uint8_t>(h.value_type);
  out[7] = 0;
  put_le<std::uint32_t>(out.data() + 8, h.values_per_page);
  put_le<std::uint32_t>(out.data() + 12, h.total_pages);
  put_le<std::uint64_t>(out.data() + 16, h.total_values);
  for (std::size_t i = 0; i < index.size(); ++i) {
    std::uint8_t* e = out.data() + kHeaderSize + i * kIndexEntrySize;
    put_le<std::uint64_t>(e, index[i].offset);
    put_le<std::uint32_t>(e + 8, index[i].compressed_len);
    put_le<std::uint32_t>(e + 12, index[i].value_count);
  }
  return out;
}

// Reserves the metadata region, streams page bodies after it, then backpatches
// header and index. Writes to "<path>.tmp" and renames into place.
class PageFileWriter {
 public:
  PageFileWriter(const std::filesystem::path& path, ColumnFileHeader header)
      : path_(path), tmp_(path), header_(header) {
    tmp_ += ".tmp";
    fd_ = ::open(tmp_.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd_ < 0) throw_errno("cannot create", tmp_);
    cursor_ = metadata_size(header_.total_pages);
    index_.reserve(header_.total_pages);
  }
  ~PageFileWriter() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }
  PageFileWriter(const PageFileWriter&) = delete;
  PageFileWriter& operator=(const PageFileWriter&) = delete;

  void append(std::span<const std::uint8_t> body, std::uint32_t value_count) {
    pwrite_all(fd_, body.data(), body.size(), cursor_, tmp_);
    index_.push_back({cursor_, static_cast<std::uint32_t>(body.size()), value_count});
    cursor_ += body.size();
  }

  std::uint64_t finish() {
    if (index_.size() != header_.total_pages) {
      throw ContractError("page count mismatch while writing " + path_.string());
    }
    const auto meta = encode_metadata(header_, index_);
    pwrite_all(fd_, meta.data(), meta.size(), 0, tmp_);
    if (::fsync(fd_) != 0) throw_errno("fsync failed on", tmp_);
    ::close(fd_);
    fd_ = -1;
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw IoError("rename " + tmp_.string() + " -> " + path_.string() + ": " + ec.message());
    return cursor_;
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  ColumnFileHeader header_;
  int fd_ = -1;
  std::uint64_t cursor_ = 0;
  std::vector<PageIndexEntry> index_;
};

std::uint32_t page_count(std::uint64_t values, std::uint32_t per_page) {
  return static_cast<std::uint32_t>((values + per_page - 1) / per_page);
}

}  // namespace

CatalogEntry write_column_timed(std::span<const std::uint32_t> values, codecs::CodecId codec,
                                std::uint32_t page_size_bytes, const std::filesystem::path& path,
                                double& codec_seconds) {
  if (page_size_bytes == 0 || page_size_bytes % 4 != 0) {
    throw ContractError("page size must be a positive multiple of 4, got " +
                        std::to_string(page_size_bytes));
  }
  ColumnFileHeader header;
  header.codec = codec;
  header.value_type = ValueType::U32;
  header.values_per_page = page_size_bytes / 4;
  header.total_values = values.size();
  header.total_pages = page_count(values.size(), header.values_per_page);

  PageFileWriter writer(path, header);
  codec_seconds = 0;
  for (std::uint32_t p = 0; p < header.total_pages; ++p) {
    const std::size_t begin = std::size_t{p} * header.values_per_page;
    const std::size_t len = std::min<std::size_t>(header.values_per_page, values.size() - begin);
    const auto t0 = std::chrono::steady_clock::now();
    const auto payload = codecs::compress_values(codec, values.subspan(begin, len));
    codec_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    writer.append(payload.bytes, static_cast<std::uint32_t>(len));
  }
  const std::uint64_t size = writer.finish();

  CatalogEntry entry;
  entry.type = ValueType::U32;
  entry.codec = codec;
  entry.path = path.string();
  entry.values_per_page = header.values_per_page;
  entry.total_values = header.total_values;
  entry.compressed_file_size = size;
  entry.uncompressed_size = 4 * header.total_values;
  return entry;
}

CatalogEntry write_column(std::span<const std::uint32_t> values, codecs::CodecId codec,
                          std::uint32_t page_size_bytes, const std::filesystem::path& path) {
  double ignored = 0;
  return write_column_timed(values, codec, page_size_bytes, path, ignored);
}

CatalogEntry write_string_column(std::span<const std::string> values,
                                 std::uint32_t page_size_bytes, const std::filesystem::path& path) {
  std::size_t max_len = 0;
  for (const auto& s : values) max_len = std::max(max_len, s.size());
  if (page_size_bytes < 8 || max_len + 8 > page_size_bytes) {
    throw ContractError("string of " + std::to_string(max_len) + " bytes does not fit a " +
                        std::to_string(page_size_bytes) + "-byte page");
  }
  ColumnFileHeader header;
  header.codec = codecs::CodecId::Raw;
  header.value_type = ValueType::Bytes;
  // Slot directory of count+1 offsets plus the longest strings must fit.
  header.values_per_page = static_cast<std::uint32_t>((page_size_bytes - 4) / (4 + max_len));
  header.total_values = values.size();
  header.total_pages = page_count(values.size(), header.values_per_page);

  PageFileWriter writer(path, header);
  std::vector<std::uint8_t> body;
  std::uint64_t data_bytes = 0;
  for (std::uint32_t p = 0; p < header.total_pages; ++p) {
    const std::size_t begin = std::size_t{p} * header.values_per_page;
    const std::size_t len = std::min<std::size_t>(header.values_per_page, values.size() - begin);
    body.assign(4 * (len + 1), 0);
    std::uint32_t offset = 0;
    for (std::size_t i = 0; i < len; ++i) {
      put_le<std::uint32_t>(body.data() + 4 * i, offset);
      const auto& s = values[begin + i];
      body.insert(body.end(), s.begin(), s.end());
      offset += static_cast<std::uint32_t>(s.size());
    }
    put_le<std::uint32_t>(body.data() + 4 * len, offset);
    writer.append(body, static_cast<std::uint32_t>(len));
    data_bytes += body.size();
  }
  const std::uint64_t size = writer.finish();

  CatalogEntry entry;
  entry.type = ValueType::Bytes;
  entry.codec = codecs::CodecId::Raw;
  entry.path = path.string();
  entry.values_per_page = header.values_per_page;
  entry.total_values = header.total_values;
  entry.compressed_file_size = size;
  entry.uncompressed_size = data_bytes;
  return entry;
}

StringPageView::StringPageView(std::span<const std::uint8_t> body, std::uint32_t value_count)
    : body_(body.data()), count_(value_count) {
  const std::size_t dir = 4 * (std::size_t{value_count} + 1);
  if (body.size() < dir) throw FormatError("string page shorter than its slot directory");
  std::uint32_t prev = 0;
  for (std::uint32_t i = 0; i <= value_count; ++i) {
    const auto off = get_le<std::uint32_t>(body.data() + 4 * i);
    if (off < prev || dir + off > body.size()) throw FormatError("corrupt string slot directory");
    prev = off;
  }
  if (dir + prev != body.size()) throw FormatError("string page has trailing bytes");
}

std::string_view StringPageView::at(std::uint32_t i) const {
  const std::uint8_t* dir = body_;
  const auto begin = get_le<std::uint32_t>(dir + 4 * i);
  const auto end = get_le<std::uint32_t>(dir + 4 * (i + 1));
  const char* data = reinterpret_cast<const char*>(body_ + 4 * (std::size_t{count_} + 1));
  return {data + begin, end - begin};
}

ColumnFile ColumnFile::open(const std::filesystem::path& path) {
  ColumnFile f;
  f.path_ = path;
  f.fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (f.fd_ < 0) throw_errno("cannot open column file", path);
  struct stat st {};
  if (::fstat(f.fd_, &st) != 0) throw_errno("cannot stat", path);
  f.file_size_ = static_cast<std::uint64_t>(st.st_size);

  std::uint8_t head[kHeaderSize];
  if (f.file_size_ < kHeaderSize || ::pread(f.fd_, head, kHeaderSize, 0) != kHeaderSize) {
    throw FormatError(path.string() + ": truncated header");
  }
  if (std::memcmp(head, kMagic.data(), kMagic.size()) != 0) {
    throw FormatError(path.string() + ": bad magic");
  }
  f.header_.format_version = head[4];
  if (f.header_.format_version != kFormatVersion) {
    throw FormatError(path.string() + ": unsupported format version " +
                      std::to_string(f.header_.format_version));
  }
  f.header_.codec = codecs::codec_from_byte(head[5]);
  if (head[6] > 1) throw FormatError(path.string() + ": unknown value type");
  f.header_.value_type = static_cast<ValueType>(head[6]);
  f.header_.values_per_page = get_le<std::uint32_t>(head + 8);
  f.header_.total_pages = get_le<std::uint32_t>(head + 12);
  f.header_.total_values = get_le<std::uint64_t>(head + 16);
  const auto& h = f.header_;
  if (h.values_per_page == 0 ||
      h.total_values > std::uint64_t{h.total_pages} * h.values_per_page ||
      (h.total_pages > 0 && h.total_values <= std::uint64_t{h.total_pages - 1} * h.values_per_page)) {
    throw FormatError(path.string() + ": inconsistent page geometry");
  }

  const std::uint64_t meta = metadata_size(h.total_pages);
  if (f.file_size_ < meta) throw FormatError(path.string() + ": truncated page index");
  std::vector<std::uint8_t> raw(meta - kHeaderSize);
  if (!raw.empty() &&
      ::pread(f.fd_, raw.data(), raw.size(), kHeaderSize) != static_cast<ssize_t>(raw.size())) {
    throw FormatError(path.string() + ": short read of page index");
  }
  f.index_.resize(h.total_pages);
  std::uint64_t expected_offset = meta;
  for (std::uint32_t i = 0; i < h.total_pages; ++i) {
    const std::uint8_t* e = raw.data() + std::size_t{i} * kIndexEntrySize;
    PageIndexEntry& entry = f.index_[i];
    entry.offset = get_le<std::uint64_t>(e);
    entry.compressed_len = get_le<std::uint32_t>(e + 8);
    entry.value_count = get_le<std::uint32_t>(e + 12);
    if (entry.offset < expected_offset || entry.offset + entry.compressed_len > f.file_size_) {
      throw FormatError(path.string() + ": page " + std::to_string(i) + " extent out of order");
    }
    const std::uint64_t want =
        std::min<std::uint64_t>(h.values_per_page, h.total_values - std::uint64_t{i} * h.values_per_page);
    if (entry.value_count != want) {
      throw FormatError(path.string() + ": page " + std::to_string(i) + " has wrong value count");
    }
    expected_offset = entry.offset + entry.compressed_len;
  }
  return f;
}

ColumnFile::ColumnFile(ColumnFile&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      path_(std::move(other.path_)),
      file_size_(other.file_size_),
      header_(other.header_),
      index_(std::move(other.index_)) {}

ColumnFile& ColumnFile::operator=(ColumnFile&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    path_ = std::move(other.path_);
    file_size_ = other.file_size_;
    header_ = other.header_;
    index_ = std::move(other.index_);
  }
  return *this;
}

ColumnFile::~ColumnFile() {
  if (fd_ >= 0) ::close(fd_);
}

void ColumnFile::check_page(std::uint32_t page_no) const {
  if (page_no >= header_.total_pages) {
    throw ContractError(path_.string() + ": page " + std::to_string(page_no) +
                        " out of range (total " + std::to_string(header_.total_pages) + ")");
  }
}

void ColumnFile::read_page_into(std::uint32_t page_no, std::vector<std::uint8_t>& buffer) const {
  check_page(page_no);
  const PageIndexEntry& e = index_[page_no];
  buffer.resize(e.compressed_len);
  std::size_t done = 0;
  while (done < e.compressed_len) {
    const ssize_t n = ::pread(fd_, buffer.data() + done, e.compressed_len - done,
                              static_cast<off_t>(e.offset + done));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      throw IoError(path_.string() + ": short read of page " + std::to_string(page_no));
    }
    done += static_cast<std::size_t>(n);
  }
}

codecs::CompressedPayload ColumnFile::read_page_bytes(std::uint32_t page_no) const {
  codecs::CompressedPayload payload;
  read_page_into(page_no, payload.bytes);
  payload.codec = header_.codec;
  payload.value_count = index_[page_no].value_count;
  return payload;
}

std::vector<std::uint32_t> ColumnFile::read_all_values() const {
  if (header_.value_type != ValueType::U32) {
    throw TypeError(path_.string() + ": not a u32 column");
  }
  std::vector<std::uint32_t> out(header_.total_values);
  std::vector<std::uint8_t> buf;
  std::size_t at = 0;
  for (std::uint32_t p = 0; p < header_.total_pages; ++p) {
    read_page_into(p, buf);
    const std::uint32_t n = index_[p].value_count;
    codecs::decompress_into(header_.codec, buf, std::span<std::uint32_t>(out).subspan(at, n));
    at += n;
  }
  return out;
}

std::vector<std::string> ColumnFile::read_all_strings() const {
  if (header_.value_type != ValueType::Bytes) {
    throw TypeError(path_.string() + ": not a raw-bytes column");
  }
  std::vector<std::string> out;
  out.reserve(header_.total_values);
  std::vector<std::uint8_t> buf;
  for (std::uint32_t p = 0; p < header_.total_pages; ++p) {
    read_page_into(p, buf);
    const StringPageView view(buf, index_[p].value_count);
    for (std::uint32_t i = 0; i < view.size(); ++i) out.emplace_back(view.at(i));
  }
  return out;
}

bool ColumnFile::drop_os_cache() const {
#if defined(POSIX_FADV_DONTNEED)
  return ::posix_fadvise(fd_, 0, 0, POSIX_FADV_DONTNEED) == 0;
#else
  return false;
#endif
}

}  // namespace colcrunch::storage
