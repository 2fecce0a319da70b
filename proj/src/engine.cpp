#include "flexfeed/engine.hpp"

#include <cmath>
#include <cstdio>

#include "flexfeed/errors.hpp"

namespace flexfeed {

RunRecord SimResult::record() const {
  RunRecord r;
  r.signals = signals;
  r.aggregate.reserve(allocations.size());
  for (const auto& a : allocations) r.aggregate.push_back(a.total());
  r.delivered = delivered;
  r.demanded = demanded;
  return r;
}

SimResult run_closed_loop(const SimConfig& config) {
  const Instance& instance = config.instance;
  instance.validate();
  CostCurve cost = config.op.cost.horizon() == 0 ? CostCurve::zero(instance.horizon) : config.op.cost;
  cost.validate(instance.grid, instance.horizon);
  if (config.op.mode == OperatorConfig::Mode::Rhc && !(config.op.beta > 0.0))
    throw ValidationError({"operator beta must be positive"});

  FeasibilitySearch search(instance, config.policy, config.search);
  Rng rng(config.seed);
  SimResult result;
  auto state = initial_state(instance);
  double previous = instance.constraints.initial_signal;

  for (int t = 1; t <= instance.horizon; ++t) {
    const FeasibilitySearch::Node node{state, previous};
    FeedbackVector fb = feedback_at(search, node, config.feedback, result.signals);

    OperatorDecision decision;
    try {
      decision = config.op.mode == OperatorConfig::Mode::Rhc
                     ? rhc_select(fb, cost, t, previous, instance.constraints, config.op.beta, config.base)
                     : sample_signal(fb, rng, t, previous, instance.constraints);
    } catch (const DeadEnd& e) {
      throw DeadEnd(e.reason(), result.signals, std::string(e.what()) + " at slot " + std::to_string(t));
    }

    Allocation alloc = config.policy.allocate(instance, state, decision.signal);
    state = step_state(instance, state, alloc);
    const double c = cost(t, decision.level, decision.signal);

    result.signals.push_back(decision.signal);
    result.feedback_entropies.push_back(fb.entropy(config.base));
    if (config.record_feedback_vectors) result.feedback_vectors.push_back(fb);
    result.slot_costs.push_back(c);
    result.total_cost += c;
    result.delivered += alloc.total();
    result.allocations.push_back(std::move(alloc));
    previous = decision.signal;
  }

  result.unmet_energy = state.unmet;
  for (const auto& s : instance.sessions) result.demanded += s.energy;
  result.verdict = check_trajectory(instance, config.policy, result.signals);
  const RunRecord run = result.record();
  result.mse = tracking_mse(std::span<const RunRecord>(&run, 1));
  if (result.demanded > 0.0) result.delivery = undelivered_mpe(std::span<const RunRecord>(&run, 1));
  return result;
}

std::vector<std::string> GeneratorParams::problems() const {
  std::vector<std::string> out;
  if (horizon < 1) out.emplace_back("horizon must be >= 1");
  if (stations < 1) out.emplace_back("stations must be >= 1");
  if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate)) out.emplace_back("arrival_rate must be >= 0");
  if (arrival_rate > 50.0) out.emplace_back("arrival_rate above 50 per slot is not supported");
  if (min_stay < 1) out.emplace_back("min_stay must be >= 1");
  if (max_stay < min_stay) out.emplace_back("max_stay must be >= min_stay");
  if (!(min_energy >= 0.0)) out.emplace_back("min_energy must be >= 0");
  if (!(max_energy >= min_energy)) out.emplace_back("max_energy must be >= min_energy");
  if (!(peak_rate > 0.0)) out.emplace_back("peak_rate must be positive");
  if (!(energy_quantum >= 0.0)) out.emplace_back("energy_quantum must be >= 0");
  return out;
}

std::vector<Session> generate_sessions(const GeneratorParams& params, std::uint64_t seed) {
  if (auto p = params.problems(); !p.empty()) throw ValidationError(std::move(p));
  Rng rng(seed);
  std::vector<Session> sessions;
  for (int t = 1; t <= params.horizon; ++t) {
    int occupied = 0;
    for (const auto& s : sessions)
      if (s.departure >= t) ++occupied;
    const int arrivals = std::min(rng.poisson(params.arrival_rate), params.stations - occupied);
    for (int k = 0; k < arrivals; ++k) {
      Session s;
      s.arrival = t;
      s.departure = std::min(params.horizon, t + static_cast<int>(rng.uniform_int(params.min_stay, params.max_stay)));
      s.peak_rate = params.peak_rate;
      const int window = s.departure - s.arrival + (params.nonnegative_arrival_laxity ? 0 : 1);
      s.energy = std::min(rng.uniform(params.min_energy, params.max_energy), params.peak_rate * window);
      if (params.energy_quantum > 0.0)
        s.energy = params.energy_quantum * std::floor(s.energy / params.energy_quantum + 1e-12);
      char id[32];
      std::snprintf(id, sizeof id, "s%04zu", sessions.size() + 1);
      s.id = id;
      sessions.push_back(std::move(s));
    }
  }
  return sessions;
}

}  // namespace flexfeed
