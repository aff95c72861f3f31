#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace gridmech {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent or out-of-range model data (bad duration bounds, a <= 0, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied parameter outside its domain (negative uplift, zero count).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Unknown investor, bus or capacity-factor key.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Total low-carbon supply above demand.
class InfeasibleSupplyError : public Error {
 public:
  using Error::Error;
};

/// Scenario with zero (or negative) probability.
class InvalidScenarioError : public Error {
 public:
  using Error::Error;
};

/// Configuration the requested algorithm does not support.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Profile lacks a field the accounting needs (e.g. lost-load allocation).
class AccountingError : public Error {
 public:
  using Error::Error;
};

/// Regression on data without spread in the regressor.
class SingularFitError : public Error {
 public:
  using Error::Error;
};

/// Scenario construction found a day with missing hours.
class GapError : public Error {
 public:
  GapError(std::string day, const std::string& what)
      : Error(what), day_(std::move(day)) {}
  const std::string& day() const noexcept { return day_; }

 private:
  std::string day_;
};

/// A record whose cluster has no fitted slope.
class UnmappedRecordError : public Error {
 public:
  using Error::Error;
};

/// Parse failure in an input file; `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The QP solver did not reach an optimal point.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridmech
