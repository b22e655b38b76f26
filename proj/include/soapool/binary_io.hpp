#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace soapool {

/// Standard CRC-32 (IEEE 802.3, reflected, as in zlib/PNG/gzip).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Little-endian serializer for the on-disk formats.
class ByteWriter {
 public:
  void bytes(std::string_view s);
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  /// Appends CRC-32 of everything written so far.
  void crc();

  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Little-endian reader. Reading past the end throws kTruncated.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string bytes(std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Shared envelope checks for the "XXXX" + u16 version + ... + CRC formats.
/// Validates magic (kBadMagic) and version (kVersionMismatch); returns a
/// reader positioned after the version field.
ByteReader open_envelope(std::span<const std::uint8_t> bytes, std::string_view magic,
                         std::uint16_t version, std::string_view what);

/// Once the header is parsed and the payload size is known: checks the exact
/// total length (kTruncated when short, kFormat when long) and the trailing
/// CRC (kChecksum).
void check_length_and_crc(std::span<const std::uint8_t> bytes, std::size_t expected,
                          std::string_view what);

}  // namespace soapool
