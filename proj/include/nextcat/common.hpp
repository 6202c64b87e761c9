#pragma once

#include <stdexcept>
#include <string>

namespace nextcat {

// Base for all errors thrown by the library. The C API maps each subclass
// to a distinct status code.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string& msg) : Error("parse: " + msg) {}
};

class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg) : Error("dim: " + msg) {}
};

class PrerequisiteError : public Error {
public:
  explicit PrerequisiteError(const std::string& msg)
      : Error("prerequisite: " + msg) {}
};

}  // namespace nextcat
