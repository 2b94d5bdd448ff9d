#pragma once

#include <stdexcept>
#include <string>

namespace swarmloc {

/// Bad inputs, bad configuration, or malformed files. Maps to CLI exit code 1.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at runtime (non-finite objective, underdetermined frame,
/// degenerate statistic). Maps to CLI exit code 2.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace swarmloc
