#pragma once

#include <cstdint>
#include <vector>

#include "flexfeed/capacity.hpp"
#include "flexfeed/operator.hpp"
#include "flexfeed/trajectory.hpp"

namespace flexfeed {

struct OperatorConfig {
  enum class Mode { Rhc, Sampler };
  Mode mode = Mode::Rhc;
  double beta = 1.0;
  CostCurve cost = CostCurve::zero(0);  // resized to the horizon when left empty
};

struct SimConfig {
  Instance instance;
  Policy policy = PolicyKind::LLF;
  FeedbackSource feedback = FeedbackSource::exact();
  OperatorConfig op;
  std::uint64_t seed = 0;
  LogBase base = LogBase::Bits;
  SearchOptions search;
  bool record_feedback_vectors = false;
};

struct SimResult {
  Trajectory signals;
  std::vector<Allocation> allocations;
  std::vector<double> feedback_entropies;
  std::vector<FeedbackVector> feedback_vectors;  // only with record_feedback_vectors
  std::vector<double> slot_costs;
  double total_cost = 0.0;
  FeasibilityVerdict verdict;
  std::vector<double> unmet_energy;  // per session
  double delivered = 0.0;
  double demanded = 0.0;
  double mse = 0.0;
  DeliveryMetrics delivery;

  RunRecord record() const;
};

/// Feedback -> operator -> disaggregation -> state update, once per slot.
/// Throws DeadEnd (with the prefix reached so far) when the feedback or the
/// operator has nothing to offer.
SimResult run_closed_loop(const SimConfig& config);

struct GeneratorParams {
  int horizon = 24;
  int stations = 1;
  double arrival_rate = 0.5;  // Poisson mean arrivals per slot
  int min_stay = 1;           // departure = arrival + stay, capped at the horizon
  int max_stay = 4;
  double min_energy = 0.0;
  double max_energy = 1.0;
  double peak_rate = 1.0;
  /// Also clip energy so each session has laxity >= 0 on arrival.
  bool nonnegative_arrival_laxity = false;
  /// Round energies down to a multiple of this when positive.
  double energy_quantum = 0.0;

  std::vector<std::string> problems() const;
};

/// Synthetic sessions: Poisson arrivals thinned by free stations, uniform
/// stays and energies, energy clipped to be feasible in isolation.
std::vector<Session> generate_sessions(const GeneratorParams& params, std::uint64_t seed);

}  // namespace flexfeed
