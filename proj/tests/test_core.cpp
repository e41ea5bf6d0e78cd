#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace kmdp;
using kmdp::testing::m1;
using kmdp::testing::m1_json;

namespace {

KilledModel from_json(const Json& j) { return build_model(parse_model_spec(j)); }

std::vector<Violation> violations_of(const Json& j) { return validate_spec(parse_model_spec(j)); }

}  // namespace

TEST(BuildModel, ReferenceModelAutoCrash) {
  const auto model = m1();
  EXPECT_EQ(model.first(), 0);
  EXPECT_EQ(model.last(), 1);
  const auto k = model.killed_state(1);
  ASSERT_TRUE(k.has_value());
  EXPECT_EQ(model.state(1, *k).id, "x*");
  // -max(q(a1), q(a2)) = -2
  EXPECT_DOUBLE_EQ(model.crash(1), -2.0);
  EXPECT_EQ(model.initial(), std::vector<double>{1.0});
}

TEST(BuildModel, ZeroRunningRewardsGiveZeroCrash) {
  const auto model = from_json(Json::parse(R"({
    "horizon": {"m": 0, "n": 2},
    "states": [[{"id": "a"}],
               [{"id": "k", "killed": true}, {"id": "b"}],
               [{"id": "k", "killed": true}, {"id": "c", "r": 1}]],
    "actions": [[{"id": "x", "owner": "a", "q": 0, "p": {"b": 0.9, "k": 0.1}}],
                [{"id": "y", "owner": "b", "q": 0, "p": {"c": 0.8, "k": 0.2}}]]
  })"));
  EXPECT_EQ(model.crash(1), 0.0);
  EXPECT_EQ(model.crash(2), 0.0);
}

TEST(BuildModel, CrashOverrideByIdAndByStage) {
  auto j = m1_json();
  j["crash"] = {{"x*", -7.5}};
  EXPECT_DOUBLE_EQ(from_json(j).crash(1), -7.5);
  j["crash"] = {{"1:x*", -3.0}};
  EXPECT_DOUBLE_EQ(from_json(j).crash(1), -3.0);
  j["crash"] = {{"nobody", -3.0}};
  EXPECT_THROW(from_json(j), ValidationError);
}

TEST(BuildModel, ZeroKillRejectedWithoutFlag) {
  auto j = m1_json();
  j["actions"][0][1]["p"] = {{"g", 0.7}, {"b", 0.3}, {"x*", 0.0}};
  try {
    from_json(j);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.violation().code, "kernel.zero_kill");
    EXPECT_EQ(e.violation().item, "a2");
    EXPECT_EQ(e.violation().stage, 1);
  }
  j["allowZeroKill"] = true;
  EXPECT_NO_THROW(from_json(j));
}

TEST(BuildModel, DefaultInitialIsFirstState) {
  auto j = Json::parse(kmdp::testing::kTwoStart);
  j.erase("mu");
  const auto model = from_json(j);
  EXPECT_EQ(model.initial(), (std::vector<double>{1.0, 0.0}));
}

TEST(Validate, ReferenceModelIsValid) { EXPECT_TRUE(validate(m1()).empty()); }

TEST(Validate, RowSumAboveOne) {
  auto j = m1_json();
  j["actions"][0][0]["p"]["g"] = 0.7;
  const auto v = violations_of(j);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, "kernel.row_sum");
  EXPECT_EQ(v[0].item, "a1");
}

TEST(Validate, StateWithoutActions) {
  auto j = m1_json();
  j["actions"][0] = Json::array();
  const auto v = violations_of(j);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].code, "state.no_actions");
  EXPECT_EQ(v[0].item, "s0");
}

TEST(Validate, ReportsEveryViolationInOrder) {
  auto j = m1_json();
  j["actions"][0][0]["p"]["g"] = -0.1;
  j["states"][1].push_back({{"id", "g"}, {"r", 1}});
  j["mu"] = {{"s0", 0.5}};
  const auto v = violations_of(j);
  std::vector<std::string> codes;
  for (const auto& x : v) codes.push_back(x.code);
  EXPECT_EQ(codes, (std::vector<std::string>{"state.duplicate", "kernel.negative", "kernel.row_sum", "initial.sum"}));
}

TEST(Validate, KilledCountAndKilledOwner) {
  auto j = m1_json();
  j["states"][1][0]["killed"] = false;
  j["states"][1][0]["r"] = 0;
  auto v = violations_of(j);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].code, "state.killed_count");

  auto two = Json::parse(kmdp::testing::kTwoStart);
  two["actions"][1][0]["owner"] = "k1";
  v = violations_of(two);
  std::vector<std::string> codes;
  for (const auto& x : v) codes.push_back(x.code);
  EXPECT_NE(std::find(codes.begin(), codes.end(), "action.killed_owner"), codes.end());
}

TEST(Validate, UnresolvedReferences) {
  auto j = m1_json();
  j["actions"][0][0]["owner"] = "nowhere";
  j["actions"][0][1]["p"]["ghost"] = 0.0;
  const auto v = violations_of(j);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].code, "ref.owner");
  EXPECT_EQ(v[1].code, "ref.successor");
}

TEST(ParseModel, SchemaErrors) {
  EXPECT_THROW(parse_model_text(""), ParseError);
  EXPECT_THROW(parse_model_text("[]"), ParseError);
  auto j = m1_json();
  j["extra"] = 1;
  EXPECT_THROW(parse_model_spec(j), ParseError);
  j = m1_json();
  j["states"][0][0]["r"] = 1;
  EXPECT_THROW(parse_model_spec(j), ParseError);
  j = m1_json();
  j["actions"][0][0]["q"] = "one";
  EXPECT_THROW(parse_model_spec(j), ParseError);
  j = m1_json();
  j["horizon"]["n"] = 0;
  EXPECT_THROW(parse_model_spec(j), ParseError);
}

TEST(DerivedModel, DropsFirstStage) {
  const auto model = kmdp::testing::two_start();
  const auto d = derived_model(model);
  EXPECT_EQ(d.first(), 1);
  EXPECT_EQ(d.last(), 2);
  EXPECT_TRUE(d.actions(1).empty());
  ASSERT_EQ(d.actions(2).size(), model.actions(2).size());
  for (ActionIndex a = 0; a < d.actions(2).size(); ++a) {
    EXPECT_EQ(d.action(2, a).id, model.action(2, a).id);
    EXPECT_EQ(d.action(2, a).transition, model.action(2, a).transition);
    EXPECT_EQ(d.action(2, a).reward, model.action(2, a).reward);
  }
  EXPECT_EQ(d.crash(1), model.crash(1));
  EXPECT_EQ(d.crash(2), model.crash(2));
  EXPECT_EQ(terminal_rewards(d), terminal_rewards(model));
  EXPECT_TRUE(validate(d).empty());
}

TEST(DerivedModel, IteratedDeletion) {
  RandomModelConfig cfg;
  cfg.min_epochs = cfg.max_epochs = 3;
  const auto model = random_model(std::uint64_t{7}, cfg);
  const auto dd = derived_model(derived_model(model));
  EXPECT_EQ(dd.first(), 2);
  EXPECT_EQ(dd.last(), 3);
  EXPECT_EQ(dd.crash(3), model.crash(3));
  EXPECT_THROW(derived_model(dd), HorizonError);
}

TEST(DerivedModel, SingleEpochHasNone) { EXPECT_THROW(derived_model(m1()), HorizonError); }

TEST(DerivedModel, JsonRoundTripOfDerivedModel) {
  const auto d = derived_model(kmdp::testing::two_start());
  const auto back = from_json(model_to_json(d));
  EXPECT_EQ(model_to_json(back), model_to_json(d));
}

// Properties over seeded random models.

TEST(CoreProperties, KillAtomIsComplementOfSurvival) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto model = random_model(s);
    for (Stage t = model.first() + 1; t <= model.last(); ++t) {
      const auto k = *model.killed_state(t);
      for (const auto& a : model.actions(t)) {
        double survive = 0.0;
        for (StateIndex y = 0; y < a.transition.size(); ++y)
          if (y != k) survive += a.transition[y];
        EXPECT_NEAR(1.0 - survive, a.transition[k], 1e-12);
      }
    }
  }
}

TEST(CoreProperties, AutoCrashMonotoneForNonnegativeRewards) {
  RandomModelConfig cfg;
  cfg.reward_low = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto model = random_model(s, cfg);
    for (Stage t = model.first() + 2; t <= model.last(); ++t) EXPECT_LE(model.crash(t), model.crash(t - 1));
  }
}

TEST(CoreProperties, AcceptedSpecsValidateAndRoundTrip) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto model = random_model(s);
    const auto doc = model_to_json(model);
    const auto spec = parse_model_spec(Json::parse(doc.dump()));
    const auto rebuilt = build_model(spec);
    EXPECT_TRUE(validate(rebuilt).empty());
    EXPECT_TRUE(validate_spec(spec).empty());
    EXPECT_EQ(model_to_json(rebuilt), doc);
  }
}

TEST(CoreProperties, DerivedModelStaysValid) {
  RandomModelConfig cfg;
  cfg.min_epochs = 2;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto model = random_model(s, cfg);
    EXPECT_TRUE(validate(derived_model(model)).empty());
  }
}
