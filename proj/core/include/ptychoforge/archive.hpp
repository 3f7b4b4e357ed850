#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptychoforge/error.hpp"

namespace ptychoforge::io {

/// Structural or integrity problem in an archive file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// CRC mismatch, truncation, or a damaged ZIP structure.
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Minimal ZIP container: entries are stored uncompressed, carry a fixed
/// 1980-01-01 timestamp and are written in the order given, so identical
/// inputs produce identical bytes. Entry sizes are limited to 32 bits.
struct ZipEntry {
  std::string name;
  std::vector<std::uint8_t> data;
};

void write_zip(const std::filesystem::path& path, const std::vector<ZipEntry>& entries);
std::vector<std::uint8_t> encode_zip(const std::vector<ZipEntry>& entries);

/// Reads every entry and verifies its CRC-32; throws ChecksumError on any
/// structural damage.
std::vector<ZipEntry> read_zip(const std::filesystem::path& path);
std::vector<ZipEntry> decode_zip(const std::vector<std::uint8_t>& bytes);

std::uint32_t crc32_of(const std::vector<std::uint8_t>& data);

}  // namespace ptychoforge::io
