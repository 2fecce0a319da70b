#include "flexfeed/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <unordered_map>

#include "flexfeed/errors.hpp"
#include "flexfeed/trajectory.hpp"

namespace flexfeed {

LogBase parse_log_base(const std::string& name) {
  if (name == "2" || name == "bits") return LogBase::Bits;
  if (name == "e" || name == "nats") return LogBase::Nats;
  throw ValidationError({"unknown log_base '" + name + "' (expected 2 or e)"});
}

const char* to_string(LogBase base) { return base == LogBase::Bits ? "2" : "e"; }

double entropy(std::span<const double> probabilities, LogBase base) {
  double h = 0.0;
  for (double p : probabilities)
    if (p > 0.0) h -= p * (base == LogBase::Bits ? std::log2(p) : std::log(p));
  return h == 0.0 ? 0.0 : h;  // no -0
}

namespace {

Count checked_add(Count a, Count b) {
  Count out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("feasible trajectory count overflows 64 bits");
  return out;
}

}  // namespace

FeedbackVector FeedbackVector::from_counts(std::vector<double> levels, std::vector<Count> counts) {
  FeedbackVector fb;
  fb.levels = std::move(levels);
  fb.counts = std::move(counts);
  for (Count c : fb.counts) fb.total = checked_add(fb.total, c);
  fb.probabilities.resize(fb.counts.size(), 0.0);
  if (fb.total > 0)
    for (std::size_t i = 0; i < fb.counts.size(); ++i)
      fb.probabilities[i] = static_cast<double>(fb.counts[i]) / static_cast<double>(fb.total);
  return fb;
}

// Exact-state memo keyed on (slot, previous level, quantized remaining energies).
class FeasibilitySearch::Memo {
 public:
  Memo(const Instance& instance, double quantum) : instance_(instance), quantum_(quantum) {}

  std::optional<std::vector<std::int64_t>> key(const Node& node) const {
    std::vector<std::int64_t> k;
    k.reserve(node.state.remaining.size() + 2);
    k.push_back(node.state.slot);
    if (instance_.constraints.ramp_limit) {
      auto idx = instance_.grid.index_of(node.previous);
      k.push_back(idx ? static_cast<std::int64_t>(*idx) : -1);
    }
    for (double e : node.state.remaining) {
      const double q = e / quantum_;
      const double r = std::round(q);
      if (std::abs(q - r) * quantum_ > kEnergyTolerance) return std::nullopt;
      k.push_back(static_cast<std::int64_t>(r));
    }
    return k;
  }

  struct Hash {
    std::size_t operator()(const std::vector<std::int64_t>& v) const noexcept {
      std::size_t h = 0xcbf29ce484222325ULL;
      for (auto x : v) h = (h ^ static_cast<std::size_t>(x)) * 0x100000001b3ULL;
      return h;
    }
  };

  std::unordered_map<std::vector<std::int64_t>, Count, Hash> table;

 private:
  const Instance& instance_;
  double quantum_;
};

FeasibilitySearch::FeasibilitySearch(Instance instance, Policy policy, SearchOptions options)
    : instance_(std::move(instance)), policy_(std::move(policy)), options_(options) {
  instance_.validate();
  if (options_.energy_quantum && !(*options_.energy_quantum > 0.0))
    throw ValidationError({"energy_quantum must be positive"});
  use_bounds_ = options_.interval_pruning && policy_.declared_monotone() && policy_.kind().has_value();
}

FeasibilitySearch::Node FeasibilitySearch::root() const {
  return Node{initial_state(instance_), instance_.constraints.initial_signal};
}

FeasibilitySearch::Node FeasibilitySearch::replay(std::span<const double> prefix) const {
  if (static_cast<int>(prefix.size()) > instance_.horizon)
    throw ValidationError({"prefix length " + std::to_string(prefix.size()) + " exceeds horizon " +
                           std::to_string(instance_.horizon)});
  Node node = root();
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (!instance_.grid.index_of(prefix[i]))
      throw ValidationError({"prefix entry " + std::to_string(i + 1) + " is not a grid level"});
    auto step = apply_signal(instance_, policy_, node.state, node.previous, prefix[i]);
    if (!step.ok())
      throw DeadEnd(DeadEnd::Reason::AlreadyInfeasible, std::vector<double>(prefix.begin(), prefix.end()),
                    "prefix violates " + std::string(to_string(step.violation->kind)) + " at slot " +
                        std::to_string(step.violation->slot) + ": " + step.violation->detail);
    node.state = std::move(step.next);
    node.previous = prefix[i];
  }
  return node;
}

std::optional<FeasibilitySearch::Node> FeasibilitySearch::child(const Node& node, std::size_t level) const {
  const double x = instance_.grid[level];
  auto step = apply_signal(instance_, policy_, node.state, node.previous, x);
  if (!step.ok()) return std::nullopt;
  return Node{std::move(step.next), x};
}

std::vector<std::size_t> FeasibilitySearch::candidate_levels(const Node& node) const {
  std::vector<std::size_t> out;
  if (node.state.terminal(instance_)) return out;
  for (auto j : node.state.active(instance_))
    if (!node.state.session(instance_, j).feasible()) return out;

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  if (use_bounds_) {
    const auto b = *policy_.bounds(instance_, node.state);
    lo = b.lower;
    hi = b.upper;
  }
  const auto& c = instance_.constraints;
  if (c.peak_limit) hi = std::min(hi, *c.peak_limit);
  if (c.ramp_limit) {
    lo = std::max(lo, node.previous - *c.ramp_limit);
    hi = std::min(hi, node.previous + *c.ramp_limit);
  }
  const auto& levels = instance_.grid.levels();
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] >= lo - kEnergyTolerance && levels[i] <= hi + kEnergyTolerance) out.push_back(i);
  return out;
}

Count FeasibilitySearch::count_impl(const Node& node, Memo* memo) const {
  if (node.state.terminal(instance_)) return 1;
  std::optional<std::vector<std::int64_t>> key;
  if (memo) {
    key = memo->key(node);
    if (key) {
      auto it = memo->table.find(*key);
      if (it != memo->table.end()) return it->second;
    }
  }
  Count total = 0;
  for (auto level : candidate_levels(node))
    if (auto next = child(node, level)) total = checked_add(total, count_impl(*next, memo));
  if (key) memo->table.emplace(std::move(*key), total);
  return total;
}

Count FeasibilitySearch::count(const Node& node) const {
  if (options_.energy_quantum) {
    Memo memo(instance_, *options_.energy_quantum);
    return count_impl(node, &memo);
  }
  return count_impl(node, nullptr);
}

Count FeasibilitySearch::count_parallel(const Node& node) const {
  if (node.state.terminal(instance_)) return 1;
  const auto levels = candidate_levels(node);
  const auto n = static_cast<std::ptrdiff_t>(levels.size());
  std::vector<Count> partial(levels.size(), 0);
  std::exception_ptr error;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      if (auto next = child(node, levels[static_cast<std::size_t>(i)])) partial[static_cast<std::size_t>(i)] = count(*next);
    } catch (...) {
#pragma omp critical(flexfeed_count_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  Count total = 0;
  for (Count c : partial) total = checked_add(total, c);
  return total;
}

bool FeasibilitySearch::exists_impl(const Node& node, Memo* memo) const {
  if (node.state.terminal(instance_)) return true;
  std::optional<std::vector<std::int64_t>> key;
  if (memo) {
    key = memo->key(node);
    if (key) {
      auto it = memo->table.find(*key);
      if (it != memo->table.end()) return it->second != 0;
    }
  }
  bool found = false;
  auto levels = candidate_levels(node);
  // Higher signals finish energy early, which usually reaches a witness first.
  for (auto it = levels.rbegin(); !found && it != levels.rend(); ++it)
    if (auto next = child(node, *it); next && exists_impl(*next, memo)) found = true;
  if (key) memo->table.emplace(std::move(*key), found ? 1 : 0);
  return found;
}

bool FeasibilitySearch::exists(const Node& node) const {
  if (options_.energy_quantum) {
    Memo memo(instance_, *options_.energy_quantum);
    return exists_impl(node, &memo);
  }
  return exists_impl(node, nullptr);
}

Count FeasibilitySearch::count_k(const Node& node, int k) const {
  k = std::min(k, remaining_slots(node));
  if (k <= 0) return exists(node) ? 1 : 0;
  if (k == remaining_slots(node)) return count(node);
  Count total = 0;
  for (auto level : candidate_levels(node))
    if (auto next = child(node, level)) total = checked_add(total, count_k(*next, k - 1));
  return total;
}

namespace {

void enumerate_into(const FeasibilitySearch& search, const FeasibilitySearch::Node& node, Trajectory& suffix,
                    std::vector<Trajectory>& out) {
  if (node.state.terminal(search.instance())) {
    out.push_back(suffix);
    return;
  }
  for (auto level : search.candidate_levels(node)) {
    if (auto next = search.child(node, level)) {
      suffix.push_back(search.instance().grid[level]);
      enumerate_into(search, *next, suffix, out);
      suffix.pop_back();
    }
  }
}

}  // namespace

std::vector<Trajectory> FeasibilitySearch::enumerate(const Node& node) const {
  std::vector<Trajectory> out;
  Trajectory suffix;
  enumerate_into(*this, node, suffix, out);
  return out;
}

std::vector<Trajectory> enumerate_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix) {
  FeasibilitySearch search(instance, policy);
  try {
    return search.enumerate(search.replay(prefix));
  } catch (const DeadEnd&) {
    return {};
  }
}

Count count_feasible(const Instance& instance, const Policy& policy, const Trajectory& prefix,
                     const SearchOptions& options) {
  FeasibilitySearch search(instance, policy, options);
  FeasibilitySearch::Node node;
  try {
    node = search.replay(prefix);
  } catch (const DeadEnd&) {
    return 0;
  }
  return options.parallel ? search.count_parallel(node) : search.count(node);
}

FeedbackVector optimal_feedback_at(const FeasibilitySearch& search, const FeasibilitySearch::Node& node,
                                   std::span<const double> prefix) {
  const auto& instance = search.instance();
  if (node.state.terminal(instance))
    throw ValidationError({"prefix already covers the whole horizon; there is no next slot"});
  const auto candidates = search.candidate_levels(node);
  std::vector<Count> counts(instance.grid.size(), 0);
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());

#pragma omp parallel for schedule(dynamic, 1) if (search.options().parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto level = candidates[static_cast<std::size_t>(i)];
      if (auto next = search.child(node, level)) counts[level] = search.count(*next);
    } catch (...) {
#pragma omp critical(flexfeed_feedback_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  auto fb = FeedbackVector::from_counts(instance.grid.levels(), std::move(counts));
  if (fb.total == 0)
    throw DeadEnd(DeadEnd::Reason::NoFlexibility, std::vector<double>(prefix.begin(), prefix.end()),
                  "no feasible completion from slot " + std::to_string(node.state.slot));
  return fb;
}

FeedbackVector optimal_feedback(const Instance& instance, const Policy& policy, const Trajectory& prefix,
                                const SearchOptions& options) {
  FeasibilitySearch search(instance, policy, options);
  return optimal_feedback_at(search, search.replay(prefix), prefix);
}

double system_capacity(const Instance& instance, const Policy& policy, LogBase base, const SearchOptions& options) {
  const Count n = count_feasible(instance, policy, {}, options);
  if (n == 0) throw DeadEnd(DeadEnd::Reason::NoFlexibility, {}, "feasible set is empty");
  const double v = static_cast<double>(n);
  return base == LogBase::Bits ? std::log2(v) : std::log(v);
}

double joint_probability(const Instance& instance, const Policy& policy, const Trajectory& trajectory,
                         const SearchOptions& options) {
  if (static_cast<int>(trajectory.size()) != instance.horizon)
    throw ValidationError({"trajectory length must equal the horizon"});
  FeasibilitySearch search(instance, policy, options);
  auto node = search.root();
  double p = 1.0;
  for (double x : trajectory) {
    const auto level = instance.grid.index_of(x);
    if (!level) return 0.0;
    Count total = 0;
    Count chosen = 0;
    std::optional<FeasibilitySearch::Node> chosen_node;
    for (auto l : search.candidate_levels(node)) {
      if (auto next = search.child(node, l)) {
        const Count c = search.count(*next);
        total = checked_add(total, c);
        if (l == *level) {
          chosen = c;
          chosen_node = std::move(next);
        }
      }
    }
    if (chosen == 0) return 0.0;
    p *= static_cast<double>(chosen) / static_cast<double>(total);
    node = std::move(*chosen_node);
  }
  return p;
}

}  // namespace flexfeed
