#pragma once

#include <stdexcept>
#include <string>

namespace lsopt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The oracle budget cannot cover the requested assessments.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDomain : public Error {
 public:
  using Error::Error;
};

}  // namespace lsopt
