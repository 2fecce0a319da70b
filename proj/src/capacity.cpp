#include "flexfeed/capacity.hpp"

#include <cmath>
#include <exception>

#include "flexfeed/errors.hpp"
#include "flexfeed/operator.hpp"

namespace flexfeed {

namespace {

struct PathResult {
  double entropy_sum = 0.0;
  bool dead_end = false;
};

PathResult sample_path(const FeasibilitySearch& search, const FeedbackSource& source, Rng rng, LogBase base) {
  const auto& instance = search.instance();
  PathResult out;
  auto node = search.root();
  Trajectory prefix;
  while (!node.state.terminal(instance)) {
    FeedbackVector fb;
    try {
      fb = feedback_at(search, node, source, prefix);
    } catch (const DeadEnd& e) {
      if (prefix.empty()) throw;  // the feasible set itself is empty
      if (source.mode == FeedbackSource::Mode::Exact)
        throw ContractViolation(std::string("exact feedback reached a dead end: ") + e.what());
      out.dead_end = true;
      return out;
    }
    out.entropy_sum += fb.entropy(base);
    const auto pick = sample_signal(fb, rng, node.state.slot, node.previous, instance.constraints);
    auto next = search.child(node, pick.level);
    if (!next) {
      // Positive feedback implies a valid step; only reachable through a bug.
      throw ContractViolation("sampled level violates a constraint at slot " + std::to_string(node.state.slot));
    }
    node = std::move(*next);
    prefix.push_back(pick.signal);
  }
  return out;
}

CapacityEstimate assemble(std::vector<PathResult> paths, std::uint64_t seed, LogBase base) {
  CapacityEstimate est;
  est.seed = seed;
  est.base = base;
  est.n_trajectories = paths.size();
  est.per_trajectory.reserve(paths.size());
  est.dead_end_flags.reserve(paths.size());
  double sum = 0.0;
  for (const auto& p : paths) {
    est.per_trajectory.push_back(p.entropy_sum);
    est.dead_end_flags.push_back(p.dead_end ? 1 : 0);
    est.dead_ends += p.dead_end ? 1 : 0;
    sum += p.entropy_sum;
  }
  const double n = static_cast<double>(paths.size());
  est.mean = sum / n;
  if (paths.size() > 1) {
    double ss = 0.0;
    for (double v : est.per_trajectory) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return est;
}

void require_samples(std::size_t n) {
  if (n < 1) throw ValidationError({"number of trajectories must be >= 1"});
}

}  // namespace

CapacityEstimate estimate_capacity(const Instance& instance, const Policy& policy, const FeedbackSource& source,
                                   std::size_t n, std::uint64_t seed, LogBase base, const SearchOptions& options) {
  require_samples(n);
  FeasibilitySearch search(instance, policy, options);
  std::vector<PathResult> paths(n);
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t l = 0; l < count; ++l) {
    try {
      paths[static_cast<std::size_t>(l)] =
          sample_path(search, source, Rng::substream(seed, static_cast<std::uint64_t>(l)), base);
    } catch (...) {
#pragma omp critical(flexfeed_capacity_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return assemble(std::move(paths), seed, base);
}

CapacityEstimate estimate_capacity_serial(const Instance& instance, const Policy& policy,
                                          const FeedbackSource& source, std::size_t n, std::uint64_t seed,
                                          LogBase base, const SearchOptions& options) {
  require_samples(n);
  SearchOptions serial = options;
  serial.parallel = false;
  FeasibilitySearch search(instance, policy, serial);
  std::vector<PathResult> paths;
  paths.reserve(n);
  for (std::size_t l = 0; l < n; ++l) paths.push_back(sample_path(search, source, Rng::substream(seed, l), base));
  return assemble(std::move(paths), seed, base);
}

namespace {

std::size_t common_horizon(std::span<const RunRecord> runs) {
  if (runs.empty()) throw ValidationError({"metrics need at least one run"});
  const auto horizon = runs.front().signals.size();
  for (const auto& r : runs)
    if (r.signals.size() != horizon || r.aggregate.size() != horizon)
      throw ValidationError({"runs must share one horizon and record one aggregate per slot"});
  if (horizon == 0) throw ValidationError({"runs have zero slots"});
  return horizon;
}

}  // namespace

double tracking_mse(std::span<const RunRecord> runs) {
  const auto horizon = common_horizon(runs);
  double sum = 0.0;
  for (const auto& r : runs)
    for (std::size_t t = 0; t < horizon; ++t) {
      const double d = r.aggregate[t] - r.signals[t];
      sum += d * d;
    }
  return sum / (static_cast<double>(runs.size()) * static_cast<double>(horizon));
}

DeliveryMetrics undelivered_mpe(std::span<const RunRecord> runs) {
  const auto horizon = common_horizon(runs);
  double delivered = 0.0;
  double demand = 0.0;
  double undelivered = 0.0;
  for (const auto& r : runs) {
    if (!(r.demanded > 0.0)) throw ValidationError({"undelivered energy is undefined for zero total demand"});
    for (double a : r.aggregate) delivered += a;
    demand += r.demanded;
    undelivered += 1.0 - r.delivered / r.demanded;
  }
  const double n = static_cast<double>(runs.size());
  DeliveryMetrics m;
  m.printed_formula = delivered / ((n * static_cast<double>(horizon)) * (demand / n));
  m.undelivered_fraction = undelivered / n;
  return m;
}

}  // namespace flexfeed
