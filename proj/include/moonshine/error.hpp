#pragma once

#include <stdexcept>
#include <string>

namespace moonshine {

// Error categories map 1:1 onto CLI exit codes (usage=1, data=2, network=3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

}  // namespace moonshine
