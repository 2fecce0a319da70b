#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flexfeed {

// Absolute tolerance for energy equalities (tracking, demand satisfaction).
inline constexpr double kEnergyTolerance = 1e-9;

// A signal trajectory or prefix, as grid level values, slot 1 first.
using Trajectory = std::vector<double>;

/// One deferrable load. Slots are 1-indexed and the session is active on
/// every slot t with arrival <= t <= departure.
struct Session {
  std::string id;
  int arrival = 1;
  int departure = 1;
  double energy = 0.0;
  double peak_rate = 1.0;

  // Largest energy deliverable inside the window at peak rate.
  double window_capacity() const { return peak_rate * (departure - arrival + 1); }
};

bool operator==(const Session& a, const Session& b);

/// The admissible aggregate power levels, strictly increasing.
class SignalGrid {
 public:
  explicit SignalGrid(std::vector<double> levels);

  /// `count` levels evenly spaced over [min, max].
  static SignalGrid uniform(double min, double max, std::size_t count);

  std::size_t size() const { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<double>& levels() const { return levels_; }
  double max() const { return levels_.back(); }

  /// Index of the level equal to `value` within kEnergyTolerance.
  std::optional<std::size_t> index_of(double value) const;

 private:
  std::vector<double> levels_;
};

/// Operator-side limits: peak shaving x_t <= peak_limit and
/// ramping |x_t - x_{t-1}| <= ramp_limit, with x_0 = initial_signal.
struct OperationalConstraints {
  std::optional<double> peak_limit;
  std::optional<double> ramp_limit;
  double initial_signal = 0.0;

  bool any() const { return peak_limit.has_value() || ramp_limit.has_value(); }
  bool peak_ok(double signal) const;
  bool ramp_ok(double signal, double previous) const;
  bool admits(double signal, double previous) const { return peak_ok(signal) && ramp_ok(signal, previous); }
};

/// The phi-independent problem data.
struct Instance {
  int horizon = 1;
  std::vector<Session> sessions;
  SignalGrid grid{std::vector<double>{0.0}};
  OperationalConstraints constraints;

  /// Empty when the instance is valid.
  std::vector<std::string> problems() const;
  /// Throws ValidationError listing every failed invariant.
  void validate() const;
};

/// Per-session energy for one slot, indexed like Instance::sessions.
struct Allocation {
  std::vector<double> energy;

  double total() const;
};

/// View of one session at a given slot.
struct SessionState {
  const Session* session = nullptr;
  double remaining_energy = 0.0;
  int slot = 1;

  // Slots left after the current one: max(0, departure - slot).
  int remaining_slots() const;
  bool active() const { return session->arrival <= slot && slot <= session->departure; }
  /// remaining_energy <= peak_rate * (remaining_slots + 1).
  bool feasible() const;
};

/// Aggregator state at the start of `slot` (before that slot's allocation).
/// `slot == horizon + 1` is the terminal state.
struct AggregatorState {
  int slot = 1;
  std::vector<double> remaining;  // per session; zero after departure
  std::vector<double> unmet;      // per session; energy still owed at departure

  SessionState session(const Instance& instance, std::size_t j) const {
    return SessionState{&instance.sessions[j], remaining[j], slot};
  }
  std::vector<std::size_t> active(const Instance& instance) const;
  std::vector<std::size_t> pending(const Instance& instance) const;
  bool has_unmet() const;
  bool terminal(const Instance& instance) const { return slot > instance.horizon; }
};

AggregatorState initial_state(const Instance& instance);

/// Applies `allocation` at state.slot and advances one slot. Sessions that
/// depart at the current slot move any leftover energy into `unmet`.
/// Throws ContractViolation when the allocation breaks a per-session bound.
AggregatorState step_state(const Instance& instance, const AggregatorState& state, const Allocation& allocation);

/// Parses a comma list of level values ("0,1,0.5"); empty string gives an empty prefix.
Trajectory parse_trajectory(const std::string& text);
std::string format_trajectory(std::span<const double> trajectory);

}  // namespace flexfeed
