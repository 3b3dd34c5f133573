#pragma once

#include <stdexcept>
#include <string>

namespace saif {

/// Precondition violated by the caller (bad dimensions, out-of-range parameter).
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every hypothesis in a prompt family was rejected; callers fall back to
/// vanilla inference on the original box.
class degenerate_family : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required cached map (or corpus file) is missing.
class input_incomplete : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed map/mask/manifest file. The message names the offending field.
class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checksum mismatch between a manifest record and the file on disk.
class integrity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace saif
