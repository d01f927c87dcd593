#pragma once

#include <stdexcept>
#include <string>

namespace catsim {

/// Base exception for configuration, parsing and contract violations.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV, model, config). Carries the offending location when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace catsim
