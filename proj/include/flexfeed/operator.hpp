#pragma once

#include <cstddef>
#include <vector>

#include "flexfeed/feedback.hpp"
#include "flexfeed/model.hpp"
#include "flexfeed/rng.hpp"

namespace flexfeed {

/// Per-slot cost f_t over the grid: either price_t * x or a table
/// indexed [slot - 1][level].
class CostCurve {
 public:
  static CostCurve linear(std::vector<double> prices);
  static CostCurve tabulated(std::vector<std::vector<double>> table);
  static CostCurve zero(int horizon) { return linear(std::vector<double>(static_cast<std::size_t>(horizon), 0.0)); }

  int horizon() const;
  bool is_linear() const { return table_.empty(); }
  const std::vector<double>& prices() const { return prices_; }

  /// f_t(x) at 1-indexed `slot` for grid level `level` with value `value`.
  double operator()(int slot, std::size_t level, double value) const;

  /// Throws ValidationError when the curve does not cover every slot/level or is not finite.
  void validate(const SignalGrid& grid, int horizon) const;

 private:
  std::vector<double> prices_;
  std::vector<std::vector<double>> table_;
};

/// sum_t f_t(x_t).
double evaluate_cost(const CostCurve& cost, const SignalGrid& grid, const Trajectory& trajectory);

struct OperatorDecision {
  double signal = 0.0;
  std::size_t level = 0;
  double objective = 0.0;
  std::size_t feasible_candidates = 0;  // positive-feedback levels passing the operational limits
};

/// argmin over levels with p(x) > 0 that pass the per-slot limits of
/// f_t(x) - beta * log p(x); ties go to the lower level. Throws DeadEnd
/// naming the binding constraint when no level qualifies.
OperatorDecision rhc_select(const FeedbackVector& feedback, const CostCurve& cost, int slot, double previous,
                            const OperationalConstraints& constraints, double beta, LogBase base = LogBase::Bits);

/// Draws a level with probability p(x) (renormalized over levels passing the
/// limits) by inverse CDF in grid order, using integer counts when present.
OperatorDecision sample_signal(const FeedbackVector& feedback, Rng& rng, int slot, double previous,
                               const OperationalConstraints& constraints);

}  // namespace flexfeed
