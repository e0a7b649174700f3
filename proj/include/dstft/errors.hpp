#pragma once

#include <stdexcept>
#include <string>

namespace dstft {

// File could not be read, parsed, or written.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A computation produced a non-finite value outside the optimizer loop.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// The optimizer loss or gradient became non-finite.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dstft
