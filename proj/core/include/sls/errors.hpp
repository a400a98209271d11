#pragma once

#include <stdexcept>
#include <string>

namespace sls {

/// Bad user-supplied configuration (flags, thresholds, dimensions).
/// Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad or insufficient data (malformed rows, degenerate pilots, short
/// series). Maps to CLI exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sls
