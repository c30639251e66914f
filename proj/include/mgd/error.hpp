#pragma once

#include <stdexcept>
#include <string>

namespace mgd {

/// Shapes or lengths of the arguments disagree, or an index is out of range.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed external input (files, command-line values).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A factorization failed or a value left the finite range.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside its documented domain (rank budget, step size, ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace mgd
