#include "ptychoforge/archive.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>
#include <limits>

namespace ptychoforge::io {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t pos) : in_(in), pos_(pos) {}
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(in_.begin() + static_cast<long>(pos_), in_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }
  [[nodiscard]] std::size_t pos() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw ChecksumError("archive truncated or corrupt");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_;
};

}  // namespace

std::uint32_t crc32_of(const std::vector<std::uint8_t>& data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - offset, 1U << 30));
    crc = crc32(crc, data.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_zip(const std::vector<ZipEntry>& entries) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (entries.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw FormatError("too many archive entries");
  }
  std::vector<std::uint8_t> out;
  Writer w(out);
  std::vector<std::uint32_t> offsets, crcs;
  for (const auto& e : entries) {
    if (e.data.size() > kMax || out.size() > kMax) {
      throw FormatError("archive member '" + e.name + "' exceeds the 32-bit size limit");
    }
    offsets.push_back(static_cast<std::uint32_t>(out.size()));
    crcs.push_back(crc32_of(e.data));
    w.u32(kLocalSig);
    w.u16(kVersion);
    w.u16(0);  // flags
    w.u16(0);  // stored
    w.u16(kDosTime);
    w.u16(kDosDate);
    w.u32(crcs.back());
    w.u32(static_cast<std::uint32_t>(e.data.size()));
    w.u32(static_cast<std::uint32_t>(e.data.size()));
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.u16(0);
    w.bytes(e.name.data(), e.name.size());
    w.bytes(e.data.data(), e.data.size());
  }
  if (out.size() > kMax) throw FormatError("archive exceeds the 32-bit size limit");
  const auto central_start = static_cast<std::uint32_t>(out.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    w.u32(kCentralSig);
    w.u16(kVersion);
    w.u16(kVersion);
    w.u16(0);
    w.u16(0);
    w.u16(kDosTime);
    w.u16(kDosDate);
    w.u32(crcs[i]);
    w.u32(static_cast<std::uint32_t>(e.data.size()));
    w.u32(static_cast<std::uint32_t>(e.data.size()));
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.u16(0);  // extra
    w.u16(0);  // comment
    w.u16(0);  // disk
    w.u16(0);  // internal attributes
    w.u32(0);  // external attributes
    w.u32(offsets[i]);
    w.bytes(e.name.data(), e.name.size());
  }
  const auto central_size = static_cast<std::uint32_t>(out.size() - central_start);
  w.u32(kEndSig);
  w.u16(0);
  w.u16(0);
  w.u16(static_cast<std::uint16_t>(entries.size()));
  w.u16(static_cast<std::uint16_t>(entries.size()));
  w.u32(central_size);
  w.u32(central_start);
  w.u16(0);
  return out;
}

void write_zip(const std::filesystem::path& path, const std::vector<ZipEntry>& entries) {
  const auto bytes = encode_zip(entries);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

std::vector<ZipEntry> decode_zip(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kEndSize = 22;
  if (bytes.size() < kEndSize) throw ChecksumError("archive truncated: no end-of-directory record");
  // No archive comment is ever written, so the end record sits at the tail.
  Reader end(bytes, bytes.size() - kEndSize);
  if (end.u32() != kEndSig) throw ChecksumError("archive truncated: end-of-directory record missing");
  end.skip(4);
  const std::uint16_t count = end.u16();
  if (end.u16() != count) throw ChecksumError("inconsistent entry counts in archive");
  const std::uint32_t central_size = end.u32();
  const std::uint32_t central_start = end.u32();
  if (static_cast<std::size_t>(central_start) + central_size > bytes.size() - kEndSize) {
    throw ChecksumError("central directory lies outside the archive");
  }

  std::vector<ZipEntry> entries;
  Reader dir(bytes, central_start);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (dir.u32() != kCentralSig) throw ChecksumError("corrupt central directory");
    dir.skip(6);
    const std::uint16_t method = dir.u16();
    dir.skip(4);
    const std::uint32_t crc = dir.u32();
    const std::uint32_t csize = dir.u32();
    const std::uint32_t usize = dir.u32();
    const std::uint16_t name_len = dir.u16();
    const std::uint16_t extra_len = dir.u16();
    const std::uint16_t comment_len = dir.u16();
    dir.skip(8);
    const std::uint32_t offset = dir.u32();
    std::string name = dir.text(name_len);
    dir.skip(static_cast<std::size_t>(extra_len) + comment_len);
    if (method != 0 || csize != usize) {
      throw FormatError("archive member '" + name + "' uses unsupported compression");
    }

    Reader local(bytes, offset);
    if (local.u32() != kLocalSig) throw ChecksumError("corrupt local header for '" + name + "'");
    local.skip(22);
    const std::uint16_t lname = local.u16();
    const std::uint16_t lextra = local.u16();
    local.skip(static_cast<std::size_t>(lname) + lextra);
    const std::size_t data_start = local.pos();
    if (data_start + usize > central_start) throw ChecksumError("member '" + name + "' is truncated");
    ZipEntry entry{std::move(name),
                   std::vector<std::uint8_t>(bytes.begin() + static_cast<long>(data_start),
                                             bytes.begin() + static_cast<long>(data_start + usize))};
    if (crc32_of(entry.data) != crc) throw ChecksumError("CRC mismatch in member '" + entry.name + "'");
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<ZipEntry> read_zip(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_zip(bytes);
}

}  // namespace ptychoforge::io
