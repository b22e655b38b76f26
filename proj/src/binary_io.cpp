#include "soapool/binary_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "soapool/error.hpp"

namespace soapool {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large buffers.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed for '" + path.string() + "'");
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

void ByteWriter::bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }
void ByteWriter::u16(std::uint16_t v) {
  for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
void ByteWriter::crc() { u32(crc32(buf_)); }

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    std::ostringstream os;
    os << "truncated payload: need " << n << " more bytes at offset " << pos_ << ", have "
       << remaining();
    throw Error(ErrorKind::kTruncated, os.str());
  }
}

std::string ByteReader::bytes(std::size_t n) {
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(bytes_[pos_++] << (8 * i));
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

ByteReader open_envelope(std::span<const std::uint8_t> bytes, std::string_view magic,
                         std::uint16_t version, std::string_view what) {
  if (bytes.size() < magic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), magic.size()) != magic) {
    throw Error(ErrorKind::kBadMagic,
                std::string(what) + ": bad magic (expected '" + std::string(magic) + "')");
  }
  ByteReader r(bytes);
  r.bytes(magic.size());
  const auto found = r.u16();
  if (found != version) {
    std::ostringstream os;
    os << what << ": version mismatch (expected " << version << ", found " << found << ")";
    throw Error(ErrorKind::kVersionMismatch, os.str());
  }
  return r;
}

void check_length_and_crc(std::span<const std::uint8_t> bytes, std::size_t expected,
                          std::string_view what) {
  if (bytes.size() < expected) {
    std::ostringstream os;
    os << what << ": truncated payload (expected " << expected << " bytes, got "
       << bytes.size() << ")";
    throw Error(ErrorKind::kTruncated, os.str());
  }
  if (bytes.size() > expected) {
    std::ostringstream os;
    os << what << ": " << bytes.size() - expected << " trailing bytes after payload";
    throw Error(ErrorKind::kFormat, os.str());
  }
  ByteReader r(bytes.subspan(expected - 4));
  const auto stored = r.u32();
  const auto actual = crc32(bytes.first(expected - 4));
  if (stored != actual) {
    std::ostringstream os;
    os << what << ": CRC mismatch (stored " << std::hex << stored << ", computed " << actual
       << ")";
    throw Error(ErrorKind::kChecksum, os.str());
  }
}

}  // namespace soapool
