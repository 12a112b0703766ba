#pragma once

#include <stdexcept>
#include <string>

namespace propbench {

/// Caller violated a precondition (bad parameter, malformed value).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data is inconsistent or unreadable (bad file, broken reference).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace propbench
