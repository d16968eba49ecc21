#pragma once

#include <stdexcept>
#include <string>

namespace nyspec {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

class DegenerateVector : public Error {
public:
  using Error::Error;
};

class MemoryBudgetExceeded : public Error {
public:
  using Error::Error;
};

class InvalidLandmarkCount : public Error {
public:
  using Error::Error;
};

class EmptyCandidatePool : public Error {
public:
  using Error::Error;
};

class DegenerateClustering : public Error {
public:
  using Error::Error;
};

/// Fewer landmark-block eigenvalues above the rank cutoff than requested.
class RankDeficientLandmarks : public Error {
public:
  RankDeficientLandmarks(const std::string& what, int available)
      : Error(what), available_(available) {}
  int available() const noexcept { return available_; }

private:
  int available_;
};

class SolverFailure : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, long row, long column)
      : Error(what), row_(row), column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

private:
  long row_;
  long column_;
};

class RaggedRows : public Error {
public:
  using Error::Error;
};

class EmptyDataset : public Error {
public:
  using Error::Error;
};

} // namespace nyspec
