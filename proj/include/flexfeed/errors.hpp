#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flexfeed {

/// Input data failed one or more invariants. `problems()` lists each failure.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// A caller broke an operation's precondition (e.g. over-allocating a session).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A signal prefix with no feasible continuation.
class DeadEnd : public std::runtime_error {
 public:
  enum class Reason {
    AlreadyInfeasible,  // the prefix itself violates a constraint
    NoFlexibility,      // the prefix is valid so far but admits no completion
    NoCandidate,        // operator found no admissible level
  };

  DeadEnd(Reason reason, std::vector<double> prefix, const std::string& what);

  Reason reason() const noexcept { return reason_; }
  const std::vector<double>& prefix() const noexcept { return prefix_; }

 private:
  Reason reason_;
  std::vector<double> prefix_;
};

const char* to_string(DeadEnd::Reason reason);

}  // namespace flexfeed
