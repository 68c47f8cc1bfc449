#pragma once

#include <stdexcept>
#include <string>

namespace plom {

// Error hierarchy mirrored by the CLI process exit codes:
// config 2, data 3, numerical 4, io 5.
class Error : public std::runtime_error {
 public:
  Error(int exit_code, const std::string& what)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(2, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(3, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(4, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(5, what) {}
};

}  // namespace plom
