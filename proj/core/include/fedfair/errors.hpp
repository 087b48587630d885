#pragma once

#include <stdexcept>
#include <string>

namespace fedfair {

// Malformed or inconsistent user-supplied configuration (files, flags, schemas).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violated preconditions on data or arguments at API boundaries.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A required demographic group or conditioning set has no samples at all.
class DegenerateGroupError : public std::runtime_error {
public:
  explicit DegenerateGroupError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedfair
