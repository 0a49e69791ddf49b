#pragma once

#include <stdexcept>
#include <string>

namespace divlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong shape, non-Hermitian matrix, bad trace, bad parameter.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A matrix function was asked for a value outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to reach its tolerance within budget.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A dimension or memory cap would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_validation(const std::string& what);
[[noreturn]] void throw_domain(const std::string& what);
[[noreturn]] void throw_resource(const std::string& what);

}  // namespace divlab
