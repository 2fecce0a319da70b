#pragma once

#include <optional>
#include <string>

#include "flexfeed/model.hpp"
#include "flexfeed/policy.hpp"

namespace flexfeed {

enum class ViolationKind {
  NotInGrid,     // signal is not a grid level
  PeakLimit,     // x_t > peak limit
  RampLimit,     // |x_t - x_{t-1}| > ramp limit
  Tracking,      // aggregate allocation != x_t
  UnmetDemand,   // a session departed with energy still owed
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int slot = 0;
  std::optional<std::size_t> session;
  std::string detail;
};

struct FeasibilityVerdict {
  bool feasible = true;
  std::optional<Violation> violation;  // first violation in slot order
};

/// Result of applying one signal to a state: the successor on success, or the
/// first constraint that failed at this slot.
struct StepOutcome {
  AggregatorState next;
  Allocation allocation;
  std::optional<Violation> violation;

  bool ok() const { return !violation.has_value(); }
};

/// One slot of the closed loop: operational limits, disaggregation, exact
/// tracking and deadline checks. `previous` is x_{t-1} (initial_signal at t=1).
StepOutcome apply_signal(const Instance& instance, const Policy& policy, const AggregatorState& state,
                         double previous, double signal);

/// Runs the policy forward along `trajectory` (length must equal the horizon)
/// and reports the first violated constraint, if any.
FeasibilityVerdict check_trajectory(const Instance& instance, const Policy& policy, const Trajectory& trajectory);

}  // namespace flexfeed
