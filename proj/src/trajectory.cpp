#include "flexfeed/trajectory.hpp"

#include <cmath>

#include "flexfeed/errors.hpp"

namespace flexfeed {

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::NotInGrid: return "not_in_grid";
    case ViolationKind::PeakLimit: return "peak_limit";
    case ViolationKind::RampLimit: return "ramp_limit";
    case ViolationKind::Tracking: return "tracking";
    case ViolationKind::UnmetDemand: return "unmet_demand";
  }
  return "unknown";
}

StepOutcome apply_signal(const Instance& instance, const Policy& policy, const AggregatorState& state,
                         double previous, double signal) {
  StepOutcome out;
  const int t = state.slot;
  if (!instance.constraints.peak_ok(signal)) {
    out.violation = Violation{ViolationKind::PeakLimit, t, std::nullopt, "signal above peak limit"};
    return out;
  }
  if (!instance.constraints.ramp_ok(signal, previous)) {
    out.violation = Violation{ViolationKind::RampLimit, t, std::nullopt, "ramp limit exceeded"};
    return out;
  }
  out.allocation = policy.allocate(instance, state, signal);
  const double delivered = out.allocation.total();
  if (std::abs(delivered - signal) > kEnergyTolerance) {
    out.violation = Violation{ViolationKind::Tracking, t, std::nullopt,
                              "aggregate " + std::to_string(delivered) + " cannot track " + std::to_string(signal)};
    return out;
  }
  out.next = step_state(instance, state, out.allocation);
  for (std::size_t j = 0; j < instance.sessions.size(); ++j) {
    if (out.next.unmet[j] > kEnergyTolerance && !(state.unmet[j] > kEnergyTolerance)) {
      out.violation = Violation{ViolationKind::UnmetDemand, t, j,
                                "session '" + instance.sessions[j].id + "' departs with " +
                                    std::to_string(out.next.unmet[j]) + " undelivered"};
      return out;
    }
  }
  return out;
}

FeasibilityVerdict check_trajectory(const Instance& instance, const Policy& policy, const Trajectory& trajectory) {
  if (static_cast<int>(trajectory.size()) != instance.horizon)
    throw ValidationError({"trajectory length " + std::to_string(trajectory.size()) + " != horizon " +
                           std::to_string(instance.horizon)});
  FeasibilityVerdict verdict;
  AggregatorState state = initial_state(instance);
  double previous = instance.constraints.initial_signal;
  for (int t = 1; t <= instance.horizon; ++t) {
    const double x = trajectory[t - 1];
    if (!instance.grid.index_of(x)) {
      verdict.feasible = false;
      verdict.violation = Violation{ViolationKind::NotInGrid, t, std::nullopt, "signal is not a grid level"};
      return verdict;
    }
    auto step = apply_signal(instance, policy, state, previous, x);
    if (!step.ok()) {
      verdict.feasible = false;
      verdict.violation = std::move(step.violation);
      return verdict;
    }
    state = std::move(step.next);
    previous = x;
  }
  return verdict;
}

}  // namespace flexfeed
