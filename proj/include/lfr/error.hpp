#pragma once

#include <stdexcept>
#include <string>

namespace lfr {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Angular or spatial index outside the declared extents.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Shapes of two operands disagree, or a value violates a type invariant.
class ExtentError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or configuration documents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File system failures: missing files, unwritable directories.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file exists but its contents do not parse or carry an unknown version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// The optimizer produced a non-finite objective.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace lfr
