#include <doctest.h>

#include <functional>

#include "flexfeed/errors.hpp"
#include "flexfeed/lookahead.hpp"
#include "support/instances.hpp"
#include "support/oracle.hpp"
#include "support/planted.hpp"

using namespace flexfeed;

namespace {

constexpr PolicyKind kAll[] = {PolicyKind::LLF, PolicyKind::EDF, PolicyKind::FIM};

fixtures::RandomShape small_shape(std::uint64_t seed) { return {4, 3, 3, seed % 3 == 0}; }

bool same_bits(const FeedbackVector& a, const FeedbackVector& b) {
  return a.levels == b.levels && a.counts == b.counts && a.total == b.total && a.probabilities == b.probabilities;
}

}  // namespace

TEST_CASE("count_k_feasible on the toy instance") {
  const auto inst = fixtures::toy();
  CHECK(count_k_feasible(inst, PolicyKind::LLF, {}, 1) == 2);
  CHECK(count_k_feasible(inst, PolicyKind::LLF, {}, 3) == 3);
  CHECK(count_k_feasible(inst, PolicyKind::LLF, {0, 0}, 1) == 1);
  CHECK(count_k_feasible(inst, PolicyKind::LLF, {0, 0}, 5) == 1);  // capped at the horizon
  CHECK_THROWS_AS(count_k_feasible(inst, PolicyKind::LLF, {}, 0), ValidationError);
}

TEST_CASE("approx_feedback on the toy instance") {
  const auto inst = fixtures::toy();
  CHECK(approx_feedback(inst, PolicyKind::LLF, {}, 1).probabilities == std::vector<double>{0.5, 0.5});
  const auto full = approx_feedback(inst, PolicyKind::LLF, {}, 3);
  CHECK(full.probabilities[0] == doctest::Approx(2.0 / 3.0));
  CHECK(full.probabilities[1] == doctest::Approx(1.0 / 3.0));
  for (int k = 1; k <= 4; ++k)
    CHECK(approx_feedback(inst, PolicyKind::LLF, {1}, k).probabilities == std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(approx_feedback(inst, PolicyKind::LLF, {1, 1}, 1), DeadEnd);
}

TEST_CASE("one_step_feasible on the toy instance") {
  auto inst = fixtures::toy();
  CHECK(one_step_feasible(inst, PolicyKind::LLF, {}) == std::vector<double>{0.0, 1.0});
  CHECK(one_step_feasible(inst, PolicyKind::LLF, {0, 0}) == std::vector<double>{1.0});
  inst.constraints.peak_limit = 0.5;
  CHECK(one_step_feasible(inst, PolicyKind::LLF, {0, 0}).empty());
}

TEST_CASE("one_step_feasible can have holes on a non-uniform grid") {
  Instance inst{4, {{"s", 2, 4, 2.0, 1.5}}, SignalGrid({0.0, 0.5, 1.5}), {}};
  CHECK(one_step_feasible(inst, PolicyKind::LLF, {0.0, 0.5}) == std::vector<double>{0.0, 1.5});
}

TEST_CASE("check_guard_conditions") {
  auto inst = fixtures::toy();
  const auto ok = check_guard_conditions(inst);
  CHECK(ok.all());
  CHECK(ok.notes.empty());

  inst.constraints.peak_limit = 1.0;
  const auto limited = check_guard_conditions(inst);
  CHECK_FALSE(limited.grid_covers_peak_rates);
  CHECK(limited.nonnegative_arrival_laxity);

  Instance late{2, {{"s", 1, 2, 3.0, 1.0}}, SignalGrid({0.0, 1.0}), {}};
  const auto lax = check_guard_conditions(late);
  CHECK_FALSE(lax.nonnegative_arrival_laxity);
  CHECK(lax.operator_follows_feedback);
}

TEST_CASE("look-ahead counts agree with brute force") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto inst = fixtures::random_instance(seed, small_shape(seed));
    for (auto kind : kAll) {
      const Policy p = kind;
      const auto S = oracle::feasible_set(inst, p);
      for (const auto& prefix : oracle::valid_prefixes(inst, p)) {
        const int left = inst.horizon - static_cast<int>(prefix.size());
        for (int k = 1; k <= left; ++k)
          CHECK(count_k_feasible(inst, p, prefix, k) == oracle::count_k_with_prefix(S, prefix, k));
        CHECK(one_step_feasible(inst, p, prefix) == oracle::one_step_set(inst, S, prefix));
      }
    }
  }
}

TEST_CASE("full-depth look-ahead is exact and every depth keeps the exact support") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto inst = fixtures::random_instance(seed, small_shape(seed));
    for (auto kind : kAll) {
      const Policy p = kind;
      const auto S = oracle::feasible_set(inst, p);
      for (const auto& prefix : oracle::valid_prefixes(inst, p)) {
        if (oracle::count_with_prefix(S, prefix) == 0) continue;
        const int left = inst.horizon - static_cast<int>(prefix.size());
        const auto exact = optimal_feedback(inst, p, prefix);
        CHECK(same_bits(approx_feedback(inst, p, prefix, left), exact));
        for (int k = 1; k <= left; ++k) {
          const auto approx = approx_feedback(inst, p, prefix, k);
          for (std::size_t i = 0; i < exact.levels.size(); ++i)
            if (exact.probabilities[i] > 0.0) CHECK(approx.probabilities[i] > 0.0);
        }
      }
    }
  }
}

TEST_CASE("following any level with positive look-ahead feedback never dead-ends") {
  std::size_t guarded = 0;
  std::size_t walks = 0;
  for (std::uint64_t seed = 1; guarded < 100 && seed <= 20000; ++seed) {
    const auto inst = fixtures::random_instance(seed, {4, 3, 3, false});
    if (!check_guard_conditions(inst).all()) continue;
    if (oracle::feasible_set(inst, PolicyKind::LLF).empty()) continue;
    ++guarded;
    for (auto kind : kAll) {
      const Policy p = kind;
      for (int k = 1; k <= inst.horizon; ++k) {
        // Explore every branch the operator might take.
        std::function<void(const Trajectory&)> walk = [&](const Trajectory& prefix) {
          if (static_cast<int>(prefix.size()) == inst.horizon) {
            CHECK(oracle::prefix_valid(inst, p, prefix));
            ++walks;
            return;
          }
          const auto fb = approx_feedback(inst, p, prefix, k);
          for (std::size_t i = 0; i < fb.levels.size(); ++i) {
            if (fb.counts[i] == 0) continue;
            auto next = prefix;
            next.push_back(fb.levels[i]);
            walk(next);
          }
        };
        if (!oracle::feasible_set(inst, p).empty()) CHECK_NOTHROW(walk({}));
      }
    }
  }
  CHECK(guarded == 100);
  CHECK(walks > 0);
}

TEST_CASE("non-monotone policies are searched level by level") {
  const auto planted = fixtures::reversed_at_max_policy();
  const auto inst = fixtures::two_session_instance();
  const auto S = oracle::feasible_set(inst, planted);
  for (const auto& prefix : oracle::valid_prefixes(inst, planted))
    CHECK(one_step_feasible(inst, planted, prefix) == oracle::one_step_set(inst, S, prefix));
}

TEST_CASE("feedback_at dispatches on the source") {
  const auto inst = fixtures::toy();
  const FeasibilitySearch search(inst, PolicyKind::LLF);
  const auto root = search.root();
  CHECK(feedback_at(search, root, FeedbackSource::exact(), {}).counts == std::vector<Count>{2, 1});
  CHECK(feedback_at(search, root, FeedbackSource::lookahead(1), {}).counts == std::vector<Count>{1, 1});
  CHECK(FeedbackSource::lookahead(2).describe() == "lookahead(2)");
  CHECK(FeedbackSource::exact().describe() == "exact");
}
