#pragma once

#include <stdexcept>
#include <string>

namespace kge {

// Malformed input, violated invariants, unusable configuration.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values, divergence, undefined numerical outcomes.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace kge
