#pragma once

#include <stdexcept>
#include <string>

namespace bridge {

// Base for every error raised by the library. Callers that only need a
// diagnostic can catch this; the derived types exist for the few places
// where the caller reacts differently (timeouts, protocol violations).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

}  // namespace bridge
