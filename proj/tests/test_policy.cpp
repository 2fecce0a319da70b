#include <doctest.h>

#include <cmath>
#include <limits>

#include "flexfeed/errors.hpp"
#include "flexfeed/policy.hpp"
#include "support/instances.hpp"
#include "support/oracle.hpp"
#include "support/planted.hpp"

using namespace flexfeed;

namespace {

constexpr PolicyKind kAll[] = {PolicyKind::LLF, PolicyKind::EDF, PolicyKind::FIM};

// Levels whose single step tracks exactly and leaves every active session
// finishable at peak rate. Decided per level by simulation, not by bounds.
std::vector<double> brute_one_slot(const Instance& inst, PolicyKind kind, const AggregatorState& st) {
  std::vector<double> out;
  for (double x : inst.grid.levels()) {
    const auto a = allocate(kind, inst, st, x);
    if (std::abs(a.total() - x) > 1e-9) continue;
    bool ok = true;
    for (auto j : st.active(inst)) {
      const auto& s = inst.sessions[j];
      const double left = st.remaining[j] - a.energy[j];
      const int slots_after = std::max(0, s.departure - st.slot);
      if (left > s.peak_rate * slots_after + 1e-9) ok = false;
    }
    if (ok) out.push_back(x);
  }
  return out;
}

AggregatorState replay(const Instance& inst, PolicyKind kind, const Trajectory& prefix) {
  auto st = initial_state(inst);
  for (double x : prefix) st = step_state(inst, st, allocate(kind, inst, st, x));
  return st;
}

}  // namespace

TEST_CASE("laxity") {
  Session s{"s", 1, 3, 1.0, 1.0};
  CHECK(laxity(SessionState{&s, 1.0, 1}) == 1.0);
  CHECK(laxity(SessionState{&s, 1.0, 3}) == -1.0);
  Session later{"l", 2, 3, 1.0, 1.0};
  CHECK(laxity(SessionState{&later, 1.0, 1}) == std::numeric_limits<double>::infinity());
}

TEST_CASE("allocate: toy LLF gives the single session everything") {
  const auto inst = fixtures::toy();
  const auto a = allocate(PolicyKind::LLF, inst, initial_state(inst), 1.0);
  CHECK(a.energy == std::vector<double>{1.0});
}

TEST_CASE("allocate: LLF serves strictly lower laxity first") {
  // laxities 0 and 2 at t = 1
  Instance inst{4, {{"tight", 1, 2, 1.0, 1.0}, {"loose", 1, 4, 1.0, 1.0}}, SignalGrid({0.0, 1.0, 2.0}), {}};
  const auto st = initial_state(inst);
  CHECK(allocate(PolicyKind::LLF, inst, st, 1.0).energy == std::vector<double>{1.0, 0.0});
  CHECK(allocate(PolicyKind::LLF, inst, st, 2.0).energy == std::vector<double>{1.0, 1.0});
}

TEST_CASE("allocate: FIM covers negative laxity first, surplus in laxity order") {
  // session 1: r = 2, e = 3, one slot left after this -> laxity -0.5, needs 1 now
  // session 2: r = 1, e = 1, two slots left -> laxity 1
  Instance inst{3, {{"neg", 1, 2, 3.0, 2.0}, {"pos", 1, 3, 1.0, 1.0}}, SignalGrid({0.0, 1.0, 2.0, 3.0}), {}};
  const auto st = initial_state(inst);
  CHECK(laxity(st.session(inst, 0)) == doctest::Approx(-0.5));
  CHECK(laxity(st.session(inst, 1)) == doctest::Approx(1.0));

  const auto a = allocate(PolicyKind::FIM, inst, st, 2.0);
  CHECK(a.energy[0] == doctest::Approx(2.0));
  CHECK(a.energy[1] == doctest::Approx(0.0));

  // Brute-force cross-check: the resulting state is still completable.
  Policy fim = PolicyKind::FIM;
  bool some_completion = false;
  for (const auto& x : oracle::all_trajectories(inst))
    if (x[0] == 2.0 && oracle::prefix_valid(inst, fim, x)) some_completion = true;
  CHECK(some_completion);

  // Below the requirement the split is proportional to the need (only one needy session here).
  CHECK(allocate(PolicyKind::FIM, inst, st, 0.5).energy == std::vector<double>{0.5, 0.0});
}

TEST_CASE("allocate: FIM splits a short signal in proportion to need") {
  // needs: 1.0 and 0.5
  Instance inst{2, {{"a", 1, 2, 2.0, 1.0}, {"b", 1, 2, 1.5, 1.0}}, SignalGrid({0.0, 0.75, 3.0}), {}};
  const auto a = allocate(PolicyKind::FIM, inst, initial_state(inst), 0.75);
  CHECK(a.energy[0] == doctest::Approx(0.5));
  CHECK(a.energy[1] == doctest::Approx(0.25));
}

TEST_CASE("allocate: tie-breaking is deterministic") {
  // Equal laxity: earlier deadline wins under LLF.
  Instance inst{4, {{"late", 1, 4, 3.0, 1.0}, {"early", 1, 2, 1.0, 1.0}}, SignalGrid({0.0, 1.0}), {}};
  const auto st = initial_state(inst);
  REQUIRE(laxity(st.session(inst, 0)) == laxity(st.session(inst, 1)));
  CHECK(allocate(PolicyKind::LLF, inst, st, 1.0).energy == std::vector<double>{0.0, 1.0});
  // Equal deadline and laxity: lower index wins under EDF.
  Instance twin{2, {{"x", 1, 2, 1.0, 1.0}, {"y", 1, 2, 1.0, 1.0}}, SignalGrid({0.0, 1.0}), {}};
  CHECK(allocate(PolicyKind::EDF, twin, initial_state(twin), 1.0).energy == std::vector<double>{1.0, 0.0});
}

TEST_CASE("allocate rejects negative signals") {
  const auto inst = fixtures::toy();
  CHECK_THROWS_AS(allocate(PolicyKind::LLF, inst, initial_state(inst), -1.0), ContractViolation);
}

TEST_CASE("allocation bounds hold for every policy") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto inst = fixtures::random_instance(seed);
    for (auto kind : kAll) {
      Policy p = kind;
      for (const auto& prefix : oracle::valid_prefixes(inst, p)) {
        const auto st = replay(inst, kind, prefix);
        double beta = 0.0;
        for (auto j : st.active(inst)) beta += std::min(inst.sessions[j].peak_rate, st.remaining[j]);
        for (double x : {0.0, 0.25, 0.5, 1.0, 1.75, 3.0, 10.0}) {
          const auto a = allocate(kind, inst, st, x);
          for (std::size_t j = 0; j < inst.sessions.size(); ++j) {
            CHECK(a.energy[j] >= 0.0);
            CHECK(a.energy[j] <= std::min(inst.sessions[j].peak_rate, st.remaining[j]) + 1e-9);
          }
          CHECK(std::abs(a.total() - std::min(x, beta)) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("interval_bounds examples") {
  const auto inst = fixtures::toy();
  const auto b1 = interval_bounds(PolicyKind::LLF, inst, initial_state(inst));
  CHECK(b1.lower == 0.0);
  CHECK(b1.upper == 1.0);

  auto st = initial_state(inst);
  st = step_state(inst, st, Allocation{{0.0}});
  st = step_state(inst, st, Allocation{{0.0}});
  const auto b3 = interval_bounds(PolicyKind::LLF, inst, st);
  CHECK(b3.lower == 1.0);
  CHECK(b3.upper == 1.0);

  Instance empty{2, {{"later", 2, 2, 1.0, 1.0}}, SignalGrid({0.0, 1.0}), {}};
  const auto b0 = interval_bounds(PolicyKind::EDF, empty, initial_state(empty));
  CHECK(b0.lower == 0.0);
  CHECK(b0.upper == 0.0);
}

TEST_CASE("interval_bounds signals an empty interval for an unfinishable state") {
  Instance inst{3, {{"a", 1, 2, 2.0, 1.0}}, SignalGrid({0.0, 1.0}), {}};
  const auto st = step_state(inst, initial_state(inst), Allocation{{0.0}});
  CHECK_THROWS_AS(interval_bounds(PolicyKind::LLF, inst, st), ContractViolation);
}

TEST_CASE("interval_bounds: two needy sessions under LLF") {
  // Both need 0.5 now; LLF fills the first completely before reaching the second.
  Instance inst{2, {{"a", 1, 2, 1.5, 1.0}, {"b", 1, 2, 1.5, 1.0}}, SignalGrid({0.0, 0.5, 1.0, 1.5, 2.0}), {}};
  const auto st = initial_state(inst);
  CHECK(interval_bounds(PolicyKind::LLF, inst, st).lower == doctest::Approx(1.5));
  CHECK(interval_bounds(PolicyKind::FIM, inst, st).lower == doctest::Approx(1.0));
  CHECK(brute_one_slot(inst, PolicyKind::LLF, st) == std::vector<double>{1.5, 2.0});
  CHECK(brute_one_slot(inst, PolicyKind::FIM, st) == std::vector<double>{1.0, 1.5, 2.0});
}

TEST_CASE("interval bounds match one-slot brute force on random instances") {
  std::size_t nodes = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto inst = fixtures::random_instance(seed);
    for (auto kind : kAll) {
      Policy p = kind;
      const auto S = oracle::feasible_set(inst, p);
      for (const auto& prefix : oracle::valid_prefixes(inst, p)) {
        const auto st = replay(inst, kind, prefix);
        bool finishable = true;
        for (auto j : st.active(inst)) finishable = finishable && st.session(inst, j).feasible();
        if (!finishable) continue;
        const auto b = interval_bounds(kind, inst, st);
        std::vector<double> in_interval;
        for (double x : inst.grid.levels())
          if (x >= b.lower - 1e-9 && x <= b.upper + 1e-9) in_interval.push_back(x);
        CHECK(in_interval == brute_one_slot(inst, kind, st));
        // Levels with a full feasible completion always sit inside the interval.
        for (double x : oracle::one_step_set(inst, S, prefix))
          CHECK((x >= b.lower - 1e-9 && x <= b.upper + 1e-9));
        ++nodes;
      }
    }
  }
  CHECK(nodes > 300);
}

TEST_CASE("monotonicity_check") {
  std::mt19937_64 rng(2024);
  SUBCASE("built-ins on the toy instance") {
    for (auto kind : {PolicyKind::LLF, PolicyKind::EDF})
      CHECK(monotonicity_check(kind, fixtures::toy(), 100, rng).monotone());
  }
  SUBCASE("planted violation is found") {
    const auto report = monotonicity_check(fixtures::reversed_at_max_policy(), fixtures::two_session_instance(), 100, rng);
    REQUIRE_FALSE(report.monotone());
    const auto& c = *report.counterexample;
    CHECK(c.lower_signal < c.upper_signal);
    CHECK(c.lower_energy > c.upper_energy);
    CHECK_FALSE(monotonicity_check_exhaustive(fixtures::reversed_at_max_policy(), fixtures::two_session_instance())
                    .monotone());
  }
  SUBCASE("built-ins exhaustively on small instances") {
    for (std::uint64_t seed = 1; seed <= 150; ++seed) {
      const auto inst = fixtures::random_instance(seed, {4, 3, 3, true});
      for (auto kind : kAll) {
        const auto report = monotonicity_check_exhaustive(kind, inst);
        CHECK_MESSAGE(report.monotone(), "seed " << seed << " policy " << to_string(kind));
      }
    }
  }
}

TEST_CASE("policy names parse case-insensitively") {
  CHECK(parse_policy_kind("llf") == PolicyKind::LLF);
  CHECK(parse_policy_kind("Fim") == PolicyKind::FIM);
  CHECK_THROWS_AS(parse_policy_kind("rr"), ValidationError);
}
