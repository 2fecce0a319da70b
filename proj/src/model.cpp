#include "flexfeed/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flexfeed/errors.hpp"

namespace flexfeed {

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::invalid_argument([&] {
        std::string msg = "validation failed";
        for (const auto& p : problems) msg += "\n  - " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

DeadEnd::DeadEnd(Reason reason, std::vector<double> prefix, const std::string& what)
    : std::runtime_error(what + " (prefix [" + format_trajectory(prefix) + "])"),
      reason_(reason),
      prefix_(std::move(prefix)) {}

const char* to_string(DeadEnd::Reason reason) {
  switch (reason) {
    case DeadEnd::Reason::AlreadyInfeasible: return "already_infeasible";
    case DeadEnd::Reason::NoFlexibility: return "no_flexibility";
    case DeadEnd::Reason::NoCandidate: return "no_candidate";
  }
  return "unknown";
}

bool operator==(const Session& a, const Session& b) {
  return a.id == b.id && a.arrival == b.arrival && a.departure == b.departure && a.energy == b.energy &&
         a.peak_rate == b.peak_rate;
}

SignalGrid::SignalGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  std::vector<std::string> problems;
  if (levels_.empty()) problems.emplace_back("signal grid is empty");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (!std::isfinite(levels_[i]) || levels_[i] < 0.0)
      problems.push_back("signal grid level " + std::to_string(i) + " is negative or not finite");
    if (i > 0 && !(levels_[i] > levels_[i - 1]))
      problems.push_back("signal grid is not strictly increasing at index " + std::to_string(i));
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

SignalGrid SignalGrid::uniform(double min, double max, std::size_t count) {
  if (count == 0) throw ValidationError({"grid needs at least one level"});
  if (count == 1) return SignalGrid({min});
  if (!(max > min)) throw ValidationError({"grid max must exceed min when levels > 1"});
  std::vector<double> levels(count);
  const double step = (max - min) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) levels[i] = min + step * static_cast<double>(i);
  levels.back() = max;
  return SignalGrid(std::move(levels));
}

std::optional<std::size_t> SignalGrid::index_of(double value) const {
  auto it = std::lower_bound(levels_.begin(), levels_.end(), value - kEnergyTolerance);
  if (it != levels_.end() && std::abs(*it - value) <= kEnergyTolerance)
    return static_cast<std::size_t>(it - levels_.begin());
  return std::nullopt;
}

bool OperationalConstraints::peak_ok(double signal) const {
  return !peak_limit || signal <= *peak_limit + kEnergyTolerance;
}

bool OperationalConstraints::ramp_ok(double signal, double previous) const {
  return !ramp_limit || std::abs(signal - previous) <= *ramp_limit + kEnergyTolerance;
}

std::vector<std::string> Instance::problems() const {
  std::vector<std::string> out;
  if (horizon < 1) out.push_back("horizon must be >= 1, got " + std::to_string(horizon));
  if (constraints.peak_limit && !(*constraints.peak_limit >= 0.0)) out.emplace_back("peak_limit must be nonnegative");
  if (constraints.ramp_limit && !(*constraints.ramp_limit >= 0.0)) out.emplace_back("ramp_limit must be nonnegative");
  if (!std::isfinite(constraints.initial_signal)) out.emplace_back("initial_signal must be finite");
  for (const auto& s : sessions) {
    const std::string tag = "session '" + s.id + "': ";
    if (s.arrival < 1 || s.arrival > horizon) out.push_back(tag + "arrival outside 1..T");
    if (s.departure < 1 || s.departure > horizon) out.push_back(tag + "departure outside 1..T");
    if (s.departure < s.arrival) out.push_back(tag + "departure < arrival");
    if (!(s.energy >= 0.0) || !std::isfinite(s.energy)) out.push_back(tag + "energy must be nonnegative");
    if (!(s.peak_rate > 0.0) || !std::isfinite(s.peak_rate)) out.push_back(tag + "peak_rate must be positive");
    if (s.departure >= s.arrival && s.peak_rate > 0.0 && s.energy > s.window_capacity() + kEnergyTolerance)
      out.push_back(tag + "energy exceeds peak_rate * window length (infeasible in isolation)");
  }
  return out;
}

void Instance::validate() const {
  auto p = problems();
  if (!p.empty()) throw ValidationError(std::move(p));
}

double Allocation::total() const {
  double sum = 0.0;
  for (double e : energy) sum += e;
  return sum;
}

int SessionState::remaining_slots() const { return std::max(0, session->departure - slot); }

bool SessionState::feasible() const {
  return remaining_energy <= session->peak_rate * (remaining_slots() + 1) + kEnergyTolerance;
}

std::vector<std::size_t> AggregatorState::active(const Instance& instance) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < instance.sessions.size(); ++j) {
    const auto& s = instance.sessions[j];
    if (s.arrival <= slot && slot <= s.departure) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> AggregatorState::pending(const Instance& instance) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < instance.sessions.size(); ++j)
    if (instance.sessions[j].arrival > slot) out.push_back(j);
  return out;
}

bool AggregatorState::has_unmet() const {
  return std::any_of(unmet.begin(), unmet.end(), [](double u) { return u > kEnergyTolerance; });
}

AggregatorState initial_state(const Instance& instance) {
  instance.validate();
  AggregatorState state;
  state.slot = 1;
  state.remaining.reserve(instance.sessions.size());
  for (const auto& s : instance.sessions) state.remaining.push_back(s.energy);
  state.unmet.assign(instance.sessions.size(), 0.0);
  return state;
}

AggregatorState step_state(const Instance& instance, const AggregatorState& state, const Allocation& allocation) {
  const std::size_t n = instance.sessions.size();
  if (allocation.energy.size() != n)
    throw ContractViolation("allocation has " + std::to_string(allocation.energy.size()) + " entries, expected " +
                            std::to_string(n));
  if (state.terminal(instance)) throw ContractViolation("cannot step past the horizon");

  AggregatorState next = state;
  next.slot = state.slot + 1;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = instance.sessions[j];
    const double phi = allocation.energy[j];
    const bool active = s.arrival <= state.slot && state.slot <= s.departure;
    if (!active) {
      if (std::abs(phi) > kEnergyTolerance)
        throw ContractViolation("session '" + s.id + "' is not active at slot " + std::to_string(state.slot));
      continue;
    }
    if (phi < -kEnergyTolerance) throw ContractViolation("negative allocation to session '" + s.id + "'");
    if (phi > s.peak_rate + kEnergyTolerance)
      throw ContractViolation("allocation to session '" + s.id + "' exceeds its peak rate");
    if (phi > state.remaining[j] + kEnergyTolerance)
      throw ContractViolation("allocation to session '" + s.id + "' exceeds its remaining energy");
    next.remaining[j] = std::max(0.0, state.remaining[j] - phi);
    if (s.departure == state.slot) {
      if (next.remaining[j] > kEnergyTolerance) next.unmet[j] = next.remaining[j];
      next.remaining[j] = 0.0;
    }
  }
  return next;
}

Trajectory parse_trajectory(const std::string& text) {
  Trajectory out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item.substr(b), &used);
    } catch (const std::exception&) {
      throw ValidationError({"bad trajectory entry '" + item + "'"});
    }
    if (item.find_first_not_of(" \t", b + used) != std::string::npos)
      throw ValidationError({"bad trajectory entry '" + item + "'"});
    out.push_back(v);
  }
  return out;
}

std::string format_trajectory(std::span<const double> trajectory) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    if (i) os << ',';
    os << trajectory[i];
  }
  return os.str();
}

}  // namespace flexfeed
