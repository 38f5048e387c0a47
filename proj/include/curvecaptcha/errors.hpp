#pragma once

#include <stdexcept>
#include <string>

namespace curvecaptcha {

// Precondition violated by the caller.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input is well-formed but cannot be processed (e.g. zero-variance sample).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ResourceExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed wire document.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ParameterError(what);
}

}  // namespace detail
}  // namespace curvecaptcha
