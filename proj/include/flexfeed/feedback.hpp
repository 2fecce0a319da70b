#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexfeed/model.hpp"
#include "flexfeed/policy.hpp"

namespace flexfeed {

using Count = std::uint64_t;

enum class LogBase { Bits, Nats };

LogBase parse_log_base(const std::string& name);
const char* to_string(LogBase base);

/// -sum p log p with 0 log 0 = 0.
double entropy(std::span<const double> probabilities, LogBase base = LogBase::Bits);

/// Probability vector over the grid levels (the flexibility feedback p_t).
/// `counts` are the integer numerators; `total` their sum.
struct FeedbackVector {
  std::vector<double> levels;
  std::vector<double> probabilities;
  std::vector<Count> counts;
  Count total = 0;

  double entropy(LogBase base = LogBase::Bits) const { return flexfeed::entropy(probabilities, base); }
  /// Builds probabilities as exact count ratios.
  static FeedbackVector from_counts(std::vector<double> levels, std::vector<Count> counts);
};

struct SearchOptions {
  /// Fan the first branching level of a count out over OpenMP threads.
  bool parallel = true;
  /// Cut branches outside the policy's one-slot interval (monotone policies only).
  bool interval_pruning = true;
  /// When set, memoize counts on states whose remaining energies are all
  /// integer multiples of this quantum.
  std::optional<double> energy_quantum;
};

/// Depth-first search over signal completions of one instance and policy.
/// Counts are exact; the result never depends on thread count.
class FeasibilitySearch {
 public:
  struct Node {
    AggregatorState state;
    double previous = 0.0;  // x_{t-1}
  };

  FeasibilitySearch(Instance instance, Policy policy, SearchOptions options = {});

  const Instance& instance() const { return instance_; }
  const Policy& policy() const { return policy_; }
  const SearchOptions& options() const { return options_; }

  Node root() const;
  /// Replays a prefix. Throws ValidationError for off-grid or over-long
  /// prefixes and DeadEnd(AlreadyInfeasible) when the prefix breaks a constraint.
  Node replay(std::span<const double> prefix) const;
  /// Successor for grid level `level`, or nullopt when that step violates a constraint.
  std::optional<Node> child(const Node& node, std::size_t level) const;
  /// Grid indices not excluded by interval bounds and operational limits.
  std::vector<std::size_t> candidate_levels(const Node& node) const;
  int remaining_slots(const Node& node) const { return instance_.horizon - node.state.slot + 1; }

  /// |S(phi, xi | prefix)|: the number of feasible completions.
  Count count(const Node& node) const;
  /// Same count, first level fanned out across OpenMP threads.
  Count count_parallel(const Node& node) const;
  /// Whether at least one feasible completion exists (short-circuits).
  bool exists(const Node& node) const;
  /// |S_k|: length-k extensions that admit a feasible completion. k is capped
  /// at remaining_slots(node); k == 0 reduces to exists().
  Count count_k(const Node& node, int k) const;
  /// All feasible completions in lexicographic grid order.
  std::vector<Trajectory> enumerate(const Node& node) const;

 private:
  class Memo;
  Count count_impl(const Node& node, Memo* memo) const;
  bool exists_impl(const Node& node, Memo* memo) const;

  Instance instance_;
  Policy policy_;
  SearchOptions options_;
  bool use_bounds_;
};

std::vector<Trajectory> enumerate_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix);

Count count_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix,
                     const SearchOptions& options = {});

/// p*_t(x | prefix) = |S(prefix, x)| / |S(prefix)|. Throws DeadEnd when the
/// prefix has no completion.
FeedbackVector optimal_feedback(const Instance& instance, const Policy& policy, const Trajectory& prefix,
                                const SearchOptions& options = {});

/// log |S(phi, xi)|. Throws DeadEnd when no trajectory is feasible.
double system_capacity(const Instance& instance, const Policy& policy, LogBase base = LogBase::Bits,
                       const SearchOptions& options = {});

/// Product of conditional optimal feedback along `trajectory`: 1/|S| on S, else 0.
double joint_probability(const Instance& instance, const Policy& policy, const Trajectory& trajectory,
                         const SearchOptions& options = {});

/// Optimal feedback from a search node; `prefix` is only used for error context.
FeedbackVector optimal_feedback_at(const FeasibilitySearch& search, const FeasibilitySearch::Node& node,
                                   std::span<const double> prefix);

}  // namespace flexfeed
