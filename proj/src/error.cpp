#include "soapool/error.hpp"

namespace soapool {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kPartitionMismatch: return "partition mismatch";
    case ErrorKind::kNotPsd: return "not PSD";
    case ErrorKind::kNumerical: return "numerical failure";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kDuplicateId: return "duplicate id";
    case ErrorKind::kEmptyDatabase: return "empty database";
    case ErrorKind::kNoValidQueries: return "no valid queries";
    case ErrorKind::kIncomparable: return "incomparable descriptors";
    case ErrorKind::kIo: return "I/O failure";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kVersionMismatch: return "version mismatch";
    case ErrorKind::kTruncated: return "truncated payload";
    case ErrorKind::kChecksum: return "checksum mismatch";
    case ErrorKind::kFormat: return "malformed payload";
  }
  return "unknown";
}

}  // namespace soapool
