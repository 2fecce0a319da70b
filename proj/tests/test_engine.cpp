#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flexfeed/engine.hpp"
#include "flexfeed/errors.hpp"
#include "support/instances.hpp"
#include "support/oracle.hpp"

using namespace flexfeed;

namespace {

SimConfig rhc(Instance inst, std::vector<double> prices, double beta, Policy policy = PolicyKind::LLF) {
  SimConfig c;
  c.instance = std::move(inst);
  c.policy = std::move(policy);
  c.op.mode = OperatorConfig::Mode::Rhc;
  c.op.beta = beta;
  c.op.cost = CostCurve::linear(std::move(prices));
  return c;
}

std::vector<double> random_prices(Rng& rng, int horizon) {
  std::vector<double> p;
  for (int t = 0; t < horizon; ++t) p.push_back(rng.uniform(0.0, 5.0));
  return p;
}

}  // namespace

TEST_CASE("toy closed loop with RHC") {
  const auto r = run_closed_loop(rhc(fixtures::toy(), {3, 2, 1}, 0.1));
  CHECK(r.signals == Trajectory{0, 0, 1});
  CHECK(r.total_cost == 1.0);
  CHECK(r.verdict.feasible);
  CHECK(r.slot_costs == std::vector<double>{0, 0, 1});
  CHECK(r.unmet_energy == std::vector<double>{0.0});
  CHECK(r.mse == 0.0);
  CHECK(r.delivery.undelivered_fraction == 0.0);
  REQUIRE(r.feedback_entropies.size() == 3);
  CHECK(r.feedback_entropies[1] == doctest::Approx(1.0));
  CHECK(r.feedback_entropies[2] == 0.0);
  CHECK(r.feedback_vectors.empty());
}

TEST_CASE("toy closed loop with the sampler stays inside the feasible set") {
  const std::vector<Trajectory> S{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SimConfig c;
    c.instance = fixtures::toy();
    c.op.mode = OperatorConfig::Mode::Sampler;
    c.seed = seed;
    c.record_feedback_vectors = true;
    const auto r = run_closed_loop(c);
    CHECK(std::find(S.begin(), S.end(), r.signals) != S.end());
    CHECK(r.feedback_vectors.size() == 3);
  }
}

TEST_CASE("no sessions: the loop holds the lowest level at zero cost") {
  Instance idle{4, {}, SignalGrid({0.0, 1.0, 2.0}), {}};
  const auto r = run_closed_loop(rhc(idle, {0, 0, 0, 0}, 1.0));
  CHECK(r.signals == Trajectory{0, 0, 0, 0});
  CHECK(r.total_cost == 0.0);
  CHECK(r.verdict.feasible);
}

TEST_CASE("closed loop rejects bad configuration and reports dead ends with context") {
  CHECK_THROWS_AS(run_closed_loop(rhc(fixtures::toy(), {1, 1}, 0.1)), ValidationError);
  CHECK_THROWS_AS(run_closed_loop(rhc(fixtures::toy(), {1, 1, 1}, 0.0)), ValidationError);

  Instance impossible{2, {{"s", 1, 2, 1.0, 1.0}}, SignalGrid({0.0, 2.0}), {}};
  try {
    run_closed_loop(rhc(impossible, {1, 1}, 1.0));
    FAIL("expected DeadEnd");
  } catch (const DeadEnd& e) {
    CHECK(e.reason() == DeadEnd::Reason::NoFlexibility);
    CHECK(e.prefix().empty());
  }
}

TEST_CASE("exact feedback with RHC always yields a feasible trajectory") {
  Rng prices(77);
  std::size_t runs = 0;
  for (std::uint64_t seed = 1; runs < 100 && seed <= 1000; ++seed) {
    const auto inst = fixtures::random_instance(seed, {4, 3, 3, true});
    for (auto kind : {PolicyKind::LLF, PolicyKind::EDF, PolicyKind::FIM}) {
      if (oracle::feasible_set(inst, kind).empty()) continue;
      const auto r = run_closed_loop(rhc(inst, random_prices(prices, inst.horizon), prices.uniform(0.01, 3.0), kind));
      CHECK_MESSAGE(r.verdict.feasible, "seed " << seed);
      CHECK(oracle::prefix_valid(inst, kind, r.signals));
    }
    ++runs;
  }
  CHECK(runs == 100);
}

TEST_CASE("look-ahead feedback drives the loop too") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto inst = fixtures::random_desk_instance(seed, 6, 4, 3, false);
    if (count_feasible(inst, PolicyKind::LLF, {}) == 0) continue;
    auto c = rhc(inst, std::vector<double>(static_cast<std::size_t>(inst.horizon), 1.0), 0.5);
    c.feedback = FeedbackSource::lookahead(2);
    const auto r = run_closed_loop(c);
    CHECK(r.verdict.feasible);
  }
}

TEST_CASE("RHC is no more expensive than sampling on average") {
  // Heuristic comparison, not a theorem; violations are reported, not fatal.
  Rng prices(5);
  int compared = 0;
  int violations = 0;
  for (std::uint64_t seed = 1; compared < 20 && seed <= 500; ++seed) {
    const auto inst = fixtures::random_desk_instance(seed, 5, 4, 3, false);
    if (count_feasible(inst, PolicyKind::LLF, {}) == 0) continue;
    ++compared;
    const auto p = random_prices(prices, inst.horizon);
    const double rhc_cost = run_closed_loop(rhc(inst, p, 0.05)).total_cost;
    double sampled = 0.0;
    for (std::uint64_t s = 0; s < 200; ++s) {
      auto c = rhc(inst, p, 0.05);
      c.op.mode = OperatorConfig::Mode::Sampler;
      c.seed = s;
      sampled += run_closed_loop(c).total_cost / 200.0;
    }
    if (rhc_cost > sampled + 1e-9) ++violations;
  }
  CHECK(compared == 20);
  MESSAGE("RHC cost above mean sampled cost on " << violations << " of " << compared << " instances");
  CHECK(violations <= compared / 2);
}

TEST_CASE("RHC shifts charging toward cheaper slots") {
  Instance inst{8,
                {{"a", 1, 8, 3.0, 1.0}, {"b", 1, 8, 2.0, 1.0}, {"c", 2, 8, 2.0, 1.0}},
                SignalGrid({0.0, 1.0, 2.0, 3.0}),
                {}};
  std::vector<double> prices;
  for (int t = 0; t < 8; ++t) prices.push_back(8.0 - t);  // strictly decreasing
  const auto r = run_closed_loop(rhc(inst, prices, 0.01));
  REQUIRE(r.verdict.feasible);
  double rhc_late = 0.0;
  for (std::size_t t = 4; t < 8; ++t) rhc_late += r.signals[t];
  double uniform_late = 0.0;
  for (const auto& s : inst.sessions)
    for (int t = std::max(5, s.arrival); t <= s.departure; ++t)
      uniform_late += s.energy / static_cast<double>(s.departure - s.arrival + 1);
  CHECK(rhc_late >= uniform_late);
}

TEST_CASE("generate_sessions") {
  GeneratorParams p;
  p.horizon = 48;
  p.stations = 3;
  p.arrival_rate = 0.0;
  CHECK(generate_sessions(p, 1).empty());

  p.arrival_rate = 5.0;
  p.stations = 2;
  p.max_energy = 10.0;
  const auto busy = generate_sessions(p, 9);
  CHECK_FALSE(busy.empty());
  for (int t = 1; t <= p.horizon; ++t) {
    int overlap = 0;
    for (const auto& s : busy) overlap += (s.arrival <= t && t <= s.departure) ? 1 : 0;
    CHECK(overlap <= 2);
  }

  p.stations = 6;
  p.arrival_rate = 0.7;
  CHECK(generate_sessions(p, 4) == generate_sessions(p, 4));

  for (const auto& s : generate_sessions(p, 4)) {
    CHECK(s.departure <= p.horizon);
    CHECK(s.energy <= s.peak_rate * (s.departure - s.arrival + 1) + 1e-12);
  }
}

TEST_CASE("generate_sessions options and validation") {
  GeneratorParams p;
  p.horizon = 30;
  p.stations = 5;
  p.arrival_rate = 1.0;
  p.min_energy = 2.0;
  p.max_energy = 6.0;
  p.nonnegative_arrival_laxity = true;
  p.energy_quantum = 0.5;
  const auto sessions = generate_sessions(p, 12);
  REQUIRE_FALSE(sessions.empty());
  for (const auto& s : sessions) {
    CHECK(s.energy <= s.peak_rate * (s.departure - s.arrival) + 1e-12);
    CHECK(std::fmod(s.energy, 0.5) == 0.0);
  }
  CHECK(sessions.front().id == "s0001");

  Instance inst{p.horizon, sessions, SignalGrid::uniform(0.0, 5.0, 11), {}};
  CHECK_NOTHROW(inst.validate());

  GeneratorParams bad;
  bad.stations = 0;
  bad.max_stay = 0;
  try {
    generate_sessions(bad, 1);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.problems().size() == 2);
  }
}
