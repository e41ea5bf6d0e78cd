#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace kmdp;
using kmdp::testing::m1;
using kmdp::testing::oracle_assess;

namespace {

GeneralPolicy m1_point(const KilledModel& model, const std::string& action) {
  return SimplePolicy(0, {{*model.find_action(1, action)}}).as_general();
}

}  // namespace

TEST(EnumerateOutcomes, ReferenceModelPointPolicy) {
  const auto model = m1();
  const auto law = enumerate_outcomes(model, model.initial(), m1_point(model, "a1"));
  ASSERT_EQ(law.size(), 3u);
  // Declared successor order: x*, g, b.
  EXPECT_TRUE(law[0].outcome.killed);
  EXPECT_EQ(law[0].outcome.kill_stage(), 1);
  EXPECT_DOUBLE_EQ(law[0].mass, 0.1);
  EXPECT_FALSE(law[1].outcome.killed);
  EXPECT_EQ(model.state(1, law[1].outcome.states.back()).id, "g");
  EXPECT_DOUBLE_EQ(law[1].mass, 0.6);
  EXPECT_EQ(model.state(1, law[2].outcome.states.back()).id, "b");
  EXPECT_DOUBLE_EQ(law[2].mass, 0.3);
}

TEST(EnumerateOutcomes, ZeroKillPrunesKilledOutcomes) {
  RandomModelConfig cfg;
  cfg.zero_kill = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto model = random_model(s, cfg);
    for (const auto& w : enumerate_outcomes(model, model.initial(), MarkovPolicy::uniform(model).as_general()))
      EXPECT_FALSE(w.outcome.killed);
  }
}

TEST(EnumerateOutcomes, MassesSumToOne) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto model = random_model(s);
    const auto law = enumerate_outcomes(model, model.initial(), random_history_policy(model, s + 11));
    EXPECT_NEAR(total_mass(law), 1.0, 1e-9);
    for (const auto& w : law) EXPECT_GE(w.mass, 0.0);
  }
}

TEST(EnumerateOutcomes, CapRaisesExplosionError) {
  const auto model = m1();
  EXPECT_THROW(enumerate_outcomes(model, model.initial(), m1_point(model, "a1"), 2), ExplosionError);
  EXPECT_NO_THROW(enumerate_outcomes(model, model.initial(), m1_point(model, "a1"), 3));
}

TEST(AssessOutcome, ReferenceModel) {
  const auto model = m1();
  const auto a1 = *model.find_action(1, "a1");
  const auto g = *model.find_state(1, "g");
  const auto k = *model.killed_state(1);
  EXPECT_DOUBLE_EQ(assess_outcome(model, Outcome{0, {0, g}, {a1}, false}), 11.0);
  EXPECT_DOUBLE_EQ(assess_outcome(model, Outcome{0, {0, k}, {a1}, true}), -1.0);
}

TEST(AssessOutcome, Inconsistent) {
  const auto model = m1();
  const auto g = *model.find_state(1, "g");
  const auto k = *model.killed_state(1);
  EXPECT_THROW(assess_outcome(model, Outcome{0, {0, g}, {0}, true}), InconsistentOutcomeError);
  EXPECT_THROW(assess_outcome(model, Outcome{0, {0, k}, {0}, false}), InconsistentOutcomeError);
  EXPECT_THROW(assess_outcome(model, Outcome{0, {0}, {}, false}), InconsistentOutcomeError);
  EXPECT_THROW(assess_outcome(model, Outcome{0, {0, g}, {9}, false}), InconsistentOutcomeError);
}

TEST(AssessOutcome, ZeroRewardsGiveZero) {
  auto j = kmdp::testing::m1_json();
  for (auto& a : j["actions"][0]) a["q"] = 0;
  for (auto& s : j["states"][1])
    if (s.contains("r")) s["r"] = 0;
  const auto model = build_model(parse_model_spec(j));
  for (const auto& w : enumerate_outcomes(model, model.initial(), MarkovPolicy::uniform(model).as_general()))
    EXPECT_EQ(assess_outcome(model, w.outcome), 0.0);
}

TEST(Expectation, ReferenceModel) {
  const auto model = m1();
  const auto law1 = enumerate_outcomes(model, model.initial(), m1_point(model, "a1"));
  EXPECT_NEAR(expectation(law1, [](const Outcome&) { return 1.0; }), 1.0, 1e-15);
  // 0.6 * 11 + 0.3 * 1 + 0.1 * (-1)
  EXPECT_NEAR(expectation(law1, [&](const Outcome& o) { return assess_outcome(model, o); }), 6.8, 1e-12);
  const auto law2 = enumerate_outcomes(model, model.initial(), m1_point(model, "a2"));
  EXPECT_NEAR(expectation(law2, [](const Outcome& o) { return o.killed && o.kill_stage() == 1 ? 1.0 : 0.0; }), 0.4,
              1e-15);
}

TEST(AssessPolicy, ReferenceModelAgainstOracle) {
  const auto model = m1();
  const auto uniform = MarkovPolicy::uniform(model).as_general();
  EXPECT_NEAR(oracle_assess(model, model.initial(), m1_point(model, "a1")), 6.8, 1e-12);
  EXPECT_NEAR(oracle_assess(model, model.initial(), uniform), 5.5, 1e-12);
  EXPECT_NEAR(assess_policy(model, 0, m1_point(model, "a1")), 6.8, 1e-12);
  EXPECT_NEAR(assess_policy(model, 0, m1_point(model, "a2")), 4.2, 1e-12);
  EXPECT_NEAR(assess_policy(model, 0, uniform), 5.5, 1e-12);
}

TEST(AssessPolicy, EvenSplitAveragesStates) {
  const auto model = kmdp::testing::two_start();
  const auto pi = MarkovPolicy::uniform(model).as_general();
  const double u = assess_policy(model, 0, pi);
  const double v = assess_policy(model, 1, pi);
  EXPECT_NEAR(assess_policy(model, {0.5, 0.5}, pi), 0.5 * u + 0.5 * v, 1e-12);
}

TEST(AssessPolicy, KilledInitialStateIsWorthCrash) {
  const auto d = derived_model(kmdp::testing::two_start());
  const auto k = *d.killed_state(1);
  EXPECT_DOUBLE_EQ(assess_policy(d, k, MarkovPolicy::uniform(d).as_general()), d.crash(1));
}

TEST(MeasureProperties, MatchesIndependentOracle) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto model = random_model(s);
    const auto pi = random_history_policy(model, s * 31 + 5);
    EXPECT_NEAR(assess_policy(model, model.initial(), pi), oracle_assess(model, model.initial(), pi), 1e-9);
  }
}

TEST(MeasureProperties, LinearInInitialDistribution) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto model = random_model(s);
    const auto pi = random_history_policy(model, s);
    const auto per_state = assess_per_state(model, pi);
    double mixed = 0.0;
    for (StateIndex x = 0; x < per_state.size(); ++x) mixed += model.initial()[x] * per_state[x];
    EXPECT_NEAR(assess_policy(model, model.initial(), pi), mixed, 1e-9);
  }
}

TEST(MeasureProperties, MonotoneInTerminalReward) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto model = random_model(s);
    const auto pi = random_history_policy(model, s + 3);
    auto j = model_to_json(model);
    CounterStream rng(s, 99);
    for (auto& st : j["states"].back())
      if (st.contains("r")) st["r"] = st["r"].get<double>() + rng.uniform(0.0, 2.0);
    const auto richer = build_model(parse_model_spec(j));
    const auto pi2 = random_history_policy(richer, s + 3);
    EXPECT_GE(assess_policy(richer, richer.initial(), pi2), assess_policy(model, model.initial(), pi) - 1e-12);
  }
}

TEST(MeasureProperties, StateMarginalsFollowChapmanKolmogorov) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto model = random_model(s);
    const auto theta = random_markov_policy(model, CounterStream(s, 4));
    const auto m = marginals(model, enumerate_outcomes(model, model.initial(), theta.as_general()));
    for (Stage t = model.first() + 1; t <= model.last(); ++t) {
      const auto i = static_cast<std::size_t>(t - model.first());
      // P{a_t = a} = sum_x P{x_{t-1} = x} theta(a|x); P{x_t = y} = sum_a P{a_t = a} p(y|a)
      std::vector<double> action_law(model.actions(t).size(), 0.0);
      for (StateIndex x = 0; x < model.states(t - 1).size(); ++x) {
        if (model.is_killed(t - 1, x)) continue;
        for (const auto& w : theta.at(t, x)) action_law[w.action] += m.states[i - 1][x] * w.probability;
      }
      for (ActionIndex a = 0; a < action_law.size(); ++a) EXPECT_NEAR(m.actions[i][a], action_law[a], 1e-12);
      for (StateIndex y = 0; y < model.states(t).size(); ++y) {
        double expect = 0.0;
        for (ActionIndex a = 0; a < action_law.size(); ++a) expect += action_law[a] * model.action(t, a).transition[y];
        EXPECT_NEAR(m.states[i][y], expect, 1e-12);
      }
    }
  }
}
