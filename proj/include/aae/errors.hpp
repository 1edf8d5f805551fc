#pragma once

#include <stdexcept>
#include <string>

namespace aae {

// Exit codes the CLI maps each error family onto.
enum class ExitCode : int {
  ok = 0,
  usage = 2,
  config = 3,
  data = 4,
  divergence = 5,
  infeasible_attack = 6,
  io = 7,
  internal = 10,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept { return ExitCode::internal; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public DataError {
 public:
  using DataError::DataError;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VocabularyError : public DataError {
 public:
  VocabularyError(const std::string& attribute, const std::string& value)
      : DataError("value '" + value + "' not in vocabulary of '" + attribute + "'"),
        value_(value) {}
  const std::string& value() const noexcept { return value_; }

 private:
  std::string value_;
};

class ConsistencyError : public DataError {
 public:
  using DataError::DataError;
};

class BudgetError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch)
      : Error(what + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")"),
        epoch_(epoch),
        batch_(batch) {}
  ExitCode exit_code() const noexcept override { return ExitCode::divergence; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

class InfeasibleAttackError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::infeasible_attack; }
};

}  // namespace aae
