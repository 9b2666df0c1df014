#pragma once

#include <stdexcept>
#include <string>

namespace focal {

// Invalid or inconsistent configuration (bad hop, too few samples, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a precondition (non-finite values, wrong length, ...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: wrong domain, shape mismatch, too few modalities.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// CSV ingestion failure. The message names the offending row and column.
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& what, long row, std::string column)
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}

  long row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  long row_;
  std::string column_;
};

// Numerical failure during optimization (NaN gradient, diverged loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint or config file that cannot be read back.
class PersistenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace focal
