#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace odeflow {

// Root of every error thrown by the library. Subclasses map onto the failure
// categories callers are expected to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class IntegrationDiverged : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(const std::string& what, std::size_t iteration = 0)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class UnsatisfiableCondition : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class DegenerateProjection : public Error {
 public:
  using Error::Error;
};

class UnsupportedAnalysis : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class FileNotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace odeflow
