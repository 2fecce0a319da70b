#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flexfeed/lookahead.hpp"

namespace flexfeed {

/// Monte Carlo estimate of the system capacity: the average over sampled
/// trajectories of the summed feedback entropies along each path.
struct CapacityEstimate {
  double mean = 0.0;
  std::vector<double> per_trajectory;
  std::size_t n_trajectories = 0;
  double std_error = 0.0;
  std::size_t dead_ends = 0;                 // look-ahead paths that ran out of options
  std::vector<std::uint8_t> dead_end_flags;  // per trajectory; its partial sum is kept
  std::uint64_t seed = 0;
  LogBase base = LogBase::Bits;
};

/// Draws N trajectories by sampling each slot from `source`. Trajectory l
/// uses Rng::substream(seed, l), so the result does not depend on thread count.
CapacityEstimate estimate_capacity(const Instance& instance, const Policy& policy, const FeedbackSource& source,
                                   std::size_t n, std::uint64_t seed, LogBase base = LogBase::Bits,
                                   const SearchOptions& options = {});

/// Single-threaded reference for estimate_capacity.
CapacityEstimate estimate_capacity_serial(const Instance& instance, const Policy& policy,
                                          const FeedbackSource& source, std::size_t n, std::uint64_t seed,
                                          LogBase base = LogBase::Bits, const SearchOptions& options = {});

/// Per-run data needed for the tracking and delivery metrics.
struct RunRecord {
  std::vector<double> signals;    // x_t
  std::vector<double> aggregate;  // sum_j phi_t(j)
  double delivered = 0.0;         // total energy delivered over the run
  double demanded = 0.0;          // sum_j e(j)
};

/// sum_k sum_t |sum_j phi_t^(k)(j) - x_t^(k)|^2 / (N * T).
double tracking_mse(std::span<const RunRecord> runs);

struct DeliveryMetrics {
  /// sum_k sum_t sum_j phi / ((N * T) * sum_j e_j), evaluated as printed.
  /// Runs with different demands use the mean demand for sum_j e_j.
  double printed_formula = 0.0;
  /// Mean over runs of 1 - delivered / demanded.
  double undelivered_fraction = 0.0;
};

/// Throws ValidationError on zero total demand or mismatched run lengths.
DeliveryMetrics undelivered_mpe(std::span<const RunRecord> runs);

}  // namespace flexfeed
