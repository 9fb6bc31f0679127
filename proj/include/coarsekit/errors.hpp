#pragma once

#include <stdexcept>
#include <string>

namespace coarsekit {

// Malformed input: unknown generator symbols, bad group specs, mixed owners.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an operation does not hold.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The operation degenerates on this input (e.g. a collar that removes every cell).
class DegenerateInputError : public ContractError {
 public:
  using ContractError::ContractError;
};

// A finite window cannot answer the question (empty intersection, etc.).
class WindowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An enumeration budget was exhausted. `completed` is the largest radius (or
// count) that was finished before the budget ran out.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, long completed)
      : std::runtime_error(what), completed_(completed) {}
  long completed() const noexcept { return completed_; }

 private:
  long completed_;
};

// An analysis refused to run because a mathematical hypothesis failed.
// `precondition` is a stable machine-readable name; `statement` says what
// the hypothesis is.
class Refusal : public std::runtime_error {
 public:
  Refusal(const std::string& what, std::string precondition, std::string statement)
      : std::runtime_error(what),
        precondition_(std::move(precondition)),
        statement_(std::move(statement)) {}
  const std::string& precondition() const noexcept { return precondition_; }
  const std::string& statement() const noexcept { return statement_; }

 private:
  std::string precondition_;
  std::string statement_;
};

}  // namespace coarsekit
