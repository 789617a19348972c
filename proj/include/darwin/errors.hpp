#pragma once

#include <stdexcept>
#include <string>

namespace darwin {

// Bad or malformed input data (files, columns, zero levels, ...).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (degenerate variance, overflow, no bracketed root, ...).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace darwin
