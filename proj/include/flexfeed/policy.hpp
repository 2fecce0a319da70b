#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flexfeed/model.hpp"

namespace flexfeed {

enum class PolicyKind { LLF, EDF, FIM };

const char* to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& name);

/// The one-slot interval [lower, upper] of aggregate signals the policy can
/// track while leaving every active session able to finish by its deadline.
struct IntervalBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Laxity of a session: max(0, d - t) - e_t / r, or +inf before arrival.
double laxity(const SessionState& s);

/// Minimum energy a session must receive this slot to stay finishable:
/// max(0, e_t - r * max(0, d - t)).
double required_energy(const SessionState& s);

/// Built-in disaggregation. Total allocated is min(signal, upper bound).
Allocation allocate(PolicyKind kind, const Instance& instance, const AggregatorState& state, double signal);

/// Active sessions in the policy's service order (LLF: laxity, deadline, index;
/// EDF: deadline, laxity, index; FIM uses LLF order for its surplus).
std::vector<std::size_t> service_order(PolicyKind kind, const Instance& instance, const AggregatorState& state);

/// Exact one-slot bounds for the built-in policy. Throws ContractViolation
/// when some active session is already unable to finish (empty interval).
IntervalBounds interval_bounds(PolicyKind kind, const Instance& instance, const AggregatorState& state);

/// A causal disaggregation policy: either a built-in kind, or a custom
/// allocation function (used for testing). Cheap to copy.
class Policy {
 public:
  using AllocateFn = std::function<Allocation(const Instance&, const AggregatorState&, double)>;

  Policy(PolicyKind kind) : kind_(kind), name_(to_string(kind)) {}  // NOLINT(implicit)

  static Policy custom(std::string name, AllocateFn fn, bool declared_monotone = false);

  Allocation allocate(const Instance& instance, const AggregatorState& state, double signal) const;

  /// Interval bounds, available for built-in policies only.
  std::optional<IntervalBounds> bounds(const Instance& instance, const AggregatorState& state) const;

  bool declared_monotone() const { return monotone_; }
  const std::optional<PolicyKind>& kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  Policy() = default;

  std::optional<PolicyKind> kind_;
  std::string name_;
  AllocateFn custom_;
  bool monotone_ = true;
};

struct MonotonicityCounterexample {
  Trajectory prefix;
  double lower_signal = 0.0;
  double upper_signal = 0.0;
  std::size_t session = 0;
  double lower_energy = 0.0;
  double upper_energy = 0.0;
};

struct MonotonicityReport {
  std::size_t prefixes_checked = 0;
  std::size_t pairs_checked = 0;
  std::optional<MonotonicityCounterexample> counterexample;

  bool monotone() const { return !counterexample.has_value(); }
};

/// Samples `samples` random valid prefixes and verifies
/// phi(x) <= phi(y) componentwise for every grid pair x <= y.
MonotonicityReport monotonicity_check(const Policy& policy, const Instance& instance, std::size_t samples,
                                      std::mt19937_64& rng);

/// Same check over every valid prefix of every length.
MonotonicityReport monotonicity_check_exhaustive(const Policy& policy, const Instance& instance);

}  // namespace flexfeed
