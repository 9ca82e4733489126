#pragma once

#include <stdexcept>
#include <string>

namespace synthtraj {

/// A caller violated an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed, corrupt or unsupported input data (files, wire frames).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace synthtraj
