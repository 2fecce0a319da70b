#pragma once

#include <span>
#include <string>
#include <vector>

#include "flexfeed/feedback.hpp"

namespace flexfeed {

/// |S_k(prefix)|: length-k extensions of the prefix that still admit a
/// feasible completion. k must be >= 1 and is capped at the remaining horizon.
Count count_k_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix, int k,
                       const SearchOptions& options = {});

/// k-step look-ahead feedback |S_{k-1}(prefix, x)| / |S_k(prefix)|.
/// Equal to optimal_feedback when k covers the remaining horizon.
FeedbackVector approx_feedback(const Instance& instance, const Policy& policy, const Trajectory& prefix, int k,
                               const SearchOptions& options = {});

FeedbackVector approx_feedback_at(const FeasibilitySearch& search, const FeasibilitySearch::Node& node, int k,
                                  std::span<const double> prefix);

/// Grid levels at the next slot that admit a feasible completion. Candidates
/// are bracketed by the policy's interval bounds and the operational limits,
/// then each is confirmed by an existence search.
std::vector<double> one_step_feasible(const FeasibilitySearch& search, const FeasibilitySearch::Node& node);
std::vector<double> one_step_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix);

/// Conditions under which look-ahead feedback cannot lead to a dead end.
struct GuardReport {
  bool grid_covers_peak_rates = false;      // no operational limits and max level >= sum of peak rates
  bool operator_follows_feedback = true;    // enforced by the operator; always reported as applicable
  bool nonnegative_arrival_laxity = false;  // every session has laxity >= 0 on arrival
  std::vector<std::string> notes;

  bool all() const { return grid_covers_peak_rates && operator_follows_feedback && nonnegative_arrival_laxity; }
};

GuardReport check_guard_conditions(const Instance& instance);

/// Where the feedback handed to the operator comes from.
struct FeedbackSource {
  enum class Mode { Exact, Lookahead };
  Mode mode = Mode::Exact;
  int depth = 1;

  static FeedbackSource exact() { return {}; }
  static FeedbackSource lookahead(int k) { return {Mode::Lookahead, k}; }
  std::string describe() const;
};

FeedbackVector feedback_at(const FeasibilitySearch& search, const FeasibilitySearch::Node& node,
                           const FeedbackSource& source, std::span<const double> prefix);

}  // namespace flexfeed
