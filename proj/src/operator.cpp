#include "flexfeed/operator.hpp"

#include <cmath>
#include <limits>

#include "flexfeed/errors.hpp"

namespace flexfeed {

CostCurve CostCurve::linear(std::vector<double> prices) {
  CostCurve c;
  c.prices_ = std::move(prices);
  return c;
}

CostCurve CostCurve::tabulated(std::vector<std::vector<double>> table) {
  CostCurve c;
  c.table_ = std::move(table);
  return c;
}

int CostCurve::horizon() const {
  return static_cast<int>(is_linear() ? prices_.size() : table_.size());
}

double CostCurve::operator()(int slot, std::size_t level, double value) const {
  const auto t = static_cast<std::size_t>(slot - 1);
  if (is_linear()) return prices_.at(t) * value;
  return table_.at(t).at(level);
}

void CostCurve::validate(const SignalGrid& grid, int horizon) const {
  std::vector<std::string> problems;
  if (this->horizon() != horizon)
    problems.push_back("cost curve covers " + std::to_string(this->horizon()) + " slots, horizon is " +
                       std::to_string(horizon));
  if (is_linear()) {
    for (std::size_t t = 0; t < prices_.size(); ++t)
      if (!std::isfinite(prices_[t])) problems.push_back("price at slot " + std::to_string(t + 1) + " is not finite");
  } else {
    for (std::size_t t = 0; t < table_.size(); ++t) {
      if (table_[t].size() != grid.size())
        problems.push_back("cost table row " + std::to_string(t + 1) + " does not cover every grid level");
      for (double v : table_[t])
        if (!std::isfinite(v)) problems.push_back("cost table row " + std::to_string(t + 1) + " has a non-finite value");
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

double evaluate_cost(const CostCurve& cost, const SignalGrid& grid, const Trajectory& trajectory) {
  double total = 0.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    std::size_t level = 0;
    if (!cost.is_linear()) {
      auto idx = grid.index_of(trajectory[i]);
      if (!idx) throw ValidationError({"trajectory entry " + std::to_string(i + 1) + " is not a grid level"});
      level = *idx;
    }
    total += cost(static_cast<int>(i + 1), level, trajectory[i]);
  }
  return total;
}

namespace {

// Indices with positive feedback; throws when none pass the limits.
std::vector<std::size_t> admissible(const FeedbackVector& fb, double previous, const OperationalConstraints& c) {
  std::vector<std::size_t> out;
  bool any_positive = false;
  bool blocked_by_peak = false;
  for (std::size_t i = 0; i < fb.probabilities.size(); ++i) {
    if (!(fb.probabilities[i] > 0.0)) continue;
    any_positive = true;
    if (!c.peak_ok(fb.levels[i])) {
      blocked_by_peak = true;
      continue;
    }
    if (!c.ramp_ok(fb.levels[i], previous)) continue;
    out.push_back(i);
  }
  if (out.empty()) {
    const char* binding = !any_positive ? "feedback has no positive level" : blocked_by_peak ? "peak_limit" : "ramp_limit";
    throw DeadEnd(DeadEnd::Reason::NoCandidate, {}, std::string("operator has no admissible level: ") + binding);
  }
  return out;
}

}  // namespace

OperatorDecision rhc_select(const FeedbackVector& feedback, const CostCurve& cost, int slot, double previous,
                            const OperationalConstraints& constraints, double beta, LogBase base) {
  if (!(beta > 0.0)) throw ContractViolation("beta must be positive");
  const auto candidates = admissible(feedback, previous, constraints);
  OperatorDecision best;
  best.objective = std::numeric_limits<double>::infinity();
  best.feasible_candidates = candidates.size();
  for (auto i : candidates) {
    const double p = feedback.probabilities[i];
    const double penalty = base == LogBase::Bits ? std::log2(p) : std::log(p);
    const double objective = cost(slot, i, feedback.levels[i]) - beta * penalty;
    if (objective < best.objective) {
      best.objective = objective;
      best.level = i;
      best.signal = feedback.levels[i];
    }
  }
  return best;
}

OperatorDecision sample_signal(const FeedbackVector& feedback, Rng& rng, int slot, double previous,
                               const OperationalConstraints& constraints) {
  (void)slot;
  const auto candidates = admissible(feedback, previous, constraints);
  OperatorDecision d;
  d.feasible_candidates = candidates.size();

  Count total = 0;
  for (auto i : candidates) total += feedback.counts.empty() ? 0 : feedback.counts[i];
  // Exact integer draw when the counts fit the generator's range; otherwise
  // fall through to the probability path.
  if (total > 0 && total <= static_cast<Count>(std::numeric_limits<std::int64_t>::max())) {
    auto draw = static_cast<Count>(rng.uniform_int(0, static_cast<std::int64_t>(total - 1)));
    for (auto i : candidates) {
      if (draw < feedback.counts[i]) {
        d.level = i;
        d.signal = feedback.levels[i];
        return d;
      }
      draw -= feedback.counts[i];
    }
  }

  double mass = 0.0;
  for (auto i : candidates) mass += feedback.probabilities[i];
  const double u = rng.uniform() * mass;
  double acc = 0.0;
  d.level = candidates.back();
  for (auto i : candidates) {
    acc += feedback.probabilities[i];
    if (u < acc) {
      d.level = i;
      break;
    }
  }
  d.signal = feedback.levels[d.level];
  return d;
}

}  // namespace flexfeed
