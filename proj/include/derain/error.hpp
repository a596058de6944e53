#pragma once

#include <stdexcept>
#include <string>

namespace derain {

// Errors are split by who is at fault so the command line front end can map
// them onto distinct exit codes.

/// Bad arguments or configuration values.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Unreadable, malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine produced a non-finite value or failed to factorize.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace derain
