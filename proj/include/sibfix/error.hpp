#pragma once

#include <stdexcept>
#include <string>

namespace sibfix {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a file format or descriptor contract.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A MethodRef that no longer matches the index or the file it came from.
class StaleReferenceError : public Error {
 public:
  using Error::Error;
};

/// The LLM or embedding provider failed after all retries.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace sibfix
