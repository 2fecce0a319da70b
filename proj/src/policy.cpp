#include "flexfeed/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flexfeed/errors.hpp"
#include "flexfeed/trajectory.hpp"

namespace flexfeed {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::LLF: return "LLF";
    case PolicyKind::EDF: return "EDF";
    case PolicyKind::FIM: return "FIM";
  }
  return "?";
}

PolicyKind parse_policy_kind(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "LLF") return PolicyKind::LLF;
  if (up == "EDF") return PolicyKind::EDF;
  if (up == "FIM") return PolicyKind::FIM;
  throw ValidationError({"unknown policy '" + name + "' (expected LLF, EDF or FIM)"});
}

double laxity(const SessionState& s) {
  if (s.slot < s.session->arrival) return std::numeric_limits<double>::infinity();
  return static_cast<double>(s.remaining_slots()) - s.remaining_energy / s.session->peak_rate;
}

double required_energy(const SessionState& s) {
  return std::max(0.0, s.remaining_energy - s.session->peak_rate * s.remaining_slots());
}

namespace {

double cap_of(const SessionState& s) { return std::min(s.session->peak_rate, s.remaining_energy); }

}  // namespace

std::vector<std::size_t> service_order(PolicyKind kind, const Instance& instance, const AggregatorState& state) {
  auto order = state.active(instance);
  std::vector<double> lax(instance.sessions.size(), 0.0);
  for (auto j : order) lax[j] = laxity(state.session(instance, j));
  const auto& S = instance.sessions;
  if (kind == PolicyKind::EDF) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (S[a].departure != S[b].departure) return S[a].departure < S[b].departure;
      if (lax[a] != lax[b]) return lax[a] < lax[b];
      return a < b;
    });
  } else {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (lax[a] != lax[b]) return lax[a] < lax[b];
      if (S[a].departure != S[b].departure) return S[a].departure < S[b].departure;
      return a < b;
    });
  }
  return order;
}

Allocation allocate(PolicyKind kind, const Instance& instance, const AggregatorState& state, double signal) {
  if (!(signal >= 0.0)) throw ContractViolation("signal must be nonnegative, got " + std::to_string(signal));
  Allocation out;
  out.energy.assign(instance.sessions.size(), 0.0);
  const auto order = service_order(kind, instance, state);
  double left = signal;

  if (kind == PolicyKind::FIM) {
    // Negative-laxity sessions first get what keeps them finishable,
    // proportionally when the signal cannot cover all of it.
    double total_required = 0.0;
    std::vector<double> req(instance.sessions.size(), 0.0);
    for (auto j : order) {
      const auto s = state.session(instance, j);
      if (laxity(s) < 0.0) {
        req[j] = std::min(required_energy(s), cap_of(s));
        total_required += req[j];
      }
    }
    if (total_required > 0.0) {
      if (signal <= total_required) {
        for (auto j : order) out.energy[j] = signal * (req[j] / total_required);
        return out;
      }
      for (auto j : order) out.energy[j] = req[j];
      left = signal - total_required;
    }
  }

  for (auto j : order) {
    if (left <= 0.0) break;
    const double room = cap_of(state.session(instance, j)) - out.energy[j];
    const double give = std::min(room, left);
    if (give > 0.0) {
      out.energy[j] += give;
      left -= give;
    }
  }
  return out;
}

IntervalBounds interval_bounds(PolicyKind kind, const Instance& instance, const AggregatorState& state) {
  IntervalBounds b;
  const auto order = service_order(kind, instance, state);
  double prefix_caps = 0.0;
  double total_required = 0.0;
  for (auto j : order) {
    const auto s = state.session(instance, j);
    if (!s.feasible())
      throw ContractViolation("session '" + s.session->id + "' can no longer finish; interval is empty");
    const double cap = cap_of(s);
    const double need = std::min(required_energy(s), cap);
    b.upper += cap;
    if (need > 0.0) {
      total_required += need;
      // Waterfilling reaches j only after everything ahead of it is full.
      b.lower = std::max(b.lower, prefix_caps + need);
    }
    prefix_caps += cap;
  }
  if (kind == PolicyKind::FIM) b.lower = total_required;
  b.lower = std::min(b.lower, b.upper);
  return b;
}

Policy Policy::custom(std::string name, AllocateFn fn, bool declared_monotone) {
  Policy p;
  p.name_ = std::move(name);
  p.custom_ = std::move(fn);
  p.monotone_ = declared_monotone;
  return p;
}

Allocation Policy::allocate(const Instance& instance, const AggregatorState& state, double signal) const {
  if (kind_) return flexfeed::allocate(*kind_, instance, state, signal);
  return custom_(instance, state, signal);
}

std::optional<IntervalBounds> Policy::bounds(const Instance& instance, const AggregatorState& state) const {
  if (!kind_) return std::nullopt;
  return interval_bounds(*kind_, instance, state);
}

namespace {

void compare_pairs(const Policy& policy, const Instance& instance, const AggregatorState& state,
                   const Trajectory& prefix, MonotonicityReport& report) {
  ++report.prefixes_checked;
  const auto& levels = instance.grid.levels();
  std::vector<Allocation> allocs;
  allocs.reserve(levels.size());
  for (double x : levels) allocs.push_back(policy.allocate(instance, state, x));
  for (std::size_t lo = 0; lo < levels.size(); ++lo) {
    for (std::size_t hi = lo + 1; hi < levels.size(); ++hi) {
      ++report.pairs_checked;
      for (std::size_t j = 0; j < instance.sessions.size(); ++j) {
        if (allocs[lo].energy[j] > allocs[hi].energy[j] + kEnergyTolerance) {
          report.counterexample =
              MonotonicityCounterexample{prefix, levels[lo], levels[hi], j, allocs[lo].energy[j], allocs[hi].energy[j]};
          return;
        }
      }
    }
  }
}

void exhaustive(const Policy& policy, const Instance& instance, const AggregatorState& state, double previous,
                Trajectory& prefix, MonotonicityReport& report) {
  if (state.terminal(instance) || report.counterexample) return;
  compare_pairs(policy, instance, state, prefix, report);
  for (double x : instance.grid.levels()) {
    if (report.counterexample) return;
    auto step = apply_signal(instance, policy, state, previous, x);
    if (!step.ok()) continue;
    prefix.push_back(x);
    exhaustive(policy, instance, step.next, x, prefix, report);
    prefix.pop_back();
  }
}

}  // namespace

MonotonicityReport monotonicity_check(const Policy& policy, const Instance& instance, std::size_t samples,
                                      std::mt19937_64& rng) {
  MonotonicityReport report;
  const auto& levels = instance.grid.levels();
  for (std::size_t s = 0; s < samples && !report.counterexample; ++s) {
    // Random valid walk of random length.
    std::uniform_int_distribution<int> len_dist(0, instance.horizon - 1);
    const int target = len_dist(rng);
    AggregatorState state = initial_state(instance);
    double previous = instance.constraints.initial_signal;
    Trajectory prefix;
    while (static_cast<int>(prefix.size()) < target) {
      std::vector<StepOutcome> options;
      std::vector<double> values;
      for (double x : levels) {
        auto step = apply_signal(instance, policy, state, previous, x);
        if (step.ok()) {
          options.push_back(std::move(step));
          values.push_back(x);
        }
      }
      if (options.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
      const auto i = pick(rng);
      state = std::move(options[i].next);
      previous = values[i];
      prefix.push_back(values[i]);
    }
    compare_pairs(policy, instance, state, prefix, report);
  }
  return report;
}

MonotonicityReport monotonicity_check_exhaustive(const Policy& policy, const Instance& instance) {
  MonotonicityReport report;
  Trajectory prefix;
  exhaustive(policy, instance, initial_state(instance), instance.constraints.initial_signal, prefix, report);
  return report;
}

}  // namespace flexfeed
