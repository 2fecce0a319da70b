#include "flexfeed/lookahead.hpp"

#include <algorithm>
#include <exception>

#include "flexfeed/errors.hpp"

namespace flexfeed {

namespace {

void require_depth(int k) {
  if (k < 1) throw ValidationError({"look-ahead depth must be >= 1, got " + std::to_string(k)});
}

}  // namespace

Count count_k_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix, int k,
                       const SearchOptions& options) {
  require_depth(k);
  FeasibilitySearch search(instance, policy, options);
  FeasibilitySearch::Node node;
  try {
    node = search.replay(prefix);
  } catch (const DeadEnd&) {
    return 0;
  }
  return search.count_k(node, k);
}

FeedbackVector approx_feedback_at(const FeasibilitySearch& search, const FeasibilitySearch::Node& node, int k,
                                  std::span<const double> prefix) {
  require_depth(k);
  const auto& instance = search.instance();
  if (node.state.terminal(instance))
    throw ValidationError({"prefix already covers the whole horizon; there is no next slot"});
  const int depth = std::min(k, search.remaining_slots(node));
  if (depth == search.remaining_slots(node)) return optimal_feedback_at(search, node, prefix);

  const auto candidates = search.candidate_levels(node);
  std::vector<Count> counts(instance.grid.size(), 0);
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());

#pragma omp parallel for schedule(dynamic, 1) if (search.options().parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto level = candidates[static_cast<std::size_t>(i)];
      if (auto next = search.child(node, level)) counts[level] = search.count_k(*next, depth - 1);
    } catch (...) {
#pragma omp critical(flexfeed_lookahead_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  auto fb = FeedbackVector::from_counts(instance.grid.levels(), std::move(counts));
  if (fb.total == 0)
    throw DeadEnd(DeadEnd::Reason::NoFlexibility, std::vector<double>(prefix.begin(), prefix.end()),
                  "no feasible extension from slot " + std::to_string(node.state.slot));
  return fb;
}

FeedbackVector approx_feedback(const Instance& instance, const Policy& policy, const Trajectory& prefix, int k,
                               const SearchOptions& options) {
  require_depth(k);
  FeasibilitySearch search(instance, policy, options);
  return approx_feedback_at(search, search.replay(prefix), k, prefix);
}

std::vector<double> one_step_feasible(const FeasibilitySearch& search, const FeasibilitySearch::Node& node) {
  const auto& grid = search.instance().grid;
  const auto candidates = search.candidate_levels(node);
  auto feasible = [&](std::size_t level) {
    auto next = search.child(node, level);
    return next && search.exists(*next);
  };

  // Every level inside the bracket is tested: on non-uniform grids the set can
  // have holes (X = {0, 0.5, 1.5}, one load owing 1.5 with two slots left).
  std::vector<double> out;
  for (auto level : candidates)
    if (feasible(level)) out.push_back(grid[level]);
  return out;
}

std::vector<double> one_step_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix) {
  FeasibilitySearch search(instance, policy);
  return one_step_feasible(search, search.replay(prefix));
}

GuardReport check_guard_conditions(const Instance& instance) {
  GuardReport r;
  double rate_sum = 0.0;
  for (const auto& s : instance.sessions) rate_sum += s.peak_rate;
  const bool has_limits = instance.constraints.any();
  r.grid_covers_peak_rates = !has_limits && instance.grid.max() >= rate_sum - kEnergyTolerance;
  if (has_limits) r.notes.emplace_back("operational constraints are configured");
  if (instance.grid.max() < rate_sum - kEnergyTolerance)
    r.notes.push_back("largest grid level is below the sum of peak rates (" + std::to_string(rate_sum) + ")");

  r.nonnegative_arrival_laxity = true;
  for (const auto& s : instance.sessions) {
    const double lax = static_cast<double>(s.departure - s.arrival) - s.energy / s.peak_rate;
    if (lax < -kEnergyTolerance) {
      r.nonnegative_arrival_laxity = false;
      r.notes.push_back("session '" + s.id + "' has laxity " + std::to_string(lax) + " on arrival");
    }
  }
  return r;
}

std::string FeedbackSource::describe() const {
  return mode == Mode::Exact ? "exact" : "lookahead(" + std::to_string(depth) + ")";
}

FeedbackVector feedback_at(const FeasibilitySearch& search, const FeasibilitySearch::Node& node,
                           const FeedbackSource& source, std::span<const double> prefix) {
  if (source.mode == FeedbackSource::Mode::Exact) return optimal_feedback_at(search, node, prefix);
  return approx_feedback_at(search, node, source.depth, prefix);
}

}  // namespace flexfeed
