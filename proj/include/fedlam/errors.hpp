#ifndef FEDLAM_ERRORS_HPP
#define FEDLAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fedlam {

/// Invalid configuration value or out-of-range argument supplied by a caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or layer layouts that do not line up.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values produced during training or estimation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk data (IDX files, config text).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output files that could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedlam

#endif  // FEDLAM_ERRORS_HPP
