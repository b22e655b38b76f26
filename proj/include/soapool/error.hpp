#pragma once

#include <stdexcept>
#include <string>

namespace soapool {

/// Coarse classification of library failures. The CLI maps these onto
/// process exit codes, so keep the set small.
enum class ErrorKind {
  kInvalidArgument,   // bad parameter or precondition violation
  kPartitionMismatch, // channel count incompatible with the partition
  kNotPsd,            // eigenvalue below the PSD tolerance
  kNumerical,         // divergence, non-convergence, overflow
  kDimensionMismatch,
  kDuplicateId,
  kEmptyDatabase,
  kNoValidQueries,
  kIncomparable,      // descriptors produced under different method tags
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kChecksum,
  kFormat,            // any other malformed payload
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace soapool
