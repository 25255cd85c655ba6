#pragma once

#include <stdexcept>
#include <string>

namespace qdyne {

// invalid or inconsistent configuration values
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// fit did not find a significant peak in the requested band
struct NoPeakError : std::runtime_error {
  explicit NoPeakError(const std::string& msg) : std::runtime_error(msg) {}
};

// iterative numerics failed to converge / produced non-finite values
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// filesystem problems (missing file, unwritable directory)
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// trace file exists but fails structural validation
struct TraceFormatError : std::runtime_error {
  explicit TraceFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// requested problem size exceeds the configured memory budget
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qdyne
