#pragma once

#include <stdexcept>
#include <string>

namespace greenspoof {

/// Caller supplied arguments that violate an operation's contract.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (embedding files, protocols, models).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while running a computation (e.g. every grid cell failed).
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace greenspoof
