#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace kmdp;
using kmdp::testing::m1;

namespace {

GeneralPolicy m1_a1(const KilledModel& model) { return SimplePolicy(0, {{*model.find_action(1, "a1")}}).as_general(); }

}  // namespace

TEST(CounterStream, DeterministicAndIndependentOfOrder) {
  CounterStream a(7, 3), b(7, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  const CounterStream root(11, 0);
  auto s1 = root.split(1), s2 = root.split(2);
  const double x2 = s2.uniform();
  const double x1 = s1.uniform();
  auto t1 = root.split(1), t2 = root.split(2);
  EXPECT_EQ(t1.uniform(), x1);
  EXPECT_EQ(t2.uniform(), x2);
  EXPECT_NE(x1, x2);
}

TEST(CounterStream, UniformRange) {
  CounterStream s(1, 0);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
  for (int i = 0; i < 1000; ++i) {
    const int v = s.between(2, 4);
    ASSERT_GE(v, 2);
    ASSERT_LE(v, 4);
  }
}

TEST(SampleIndex, InversionInDeclaredOrder) {
  const std::vector<double> p{0.1, 0.0, 0.6, 0.3};
  EXPECT_EQ(sample_index(p, 0.0), 0u);
  EXPECT_EQ(sample_index(p, 0.0999), 0u);
  EXPECT_EQ(sample_index(p, 0.1), 2u);
  EXPECT_EQ(sample_index(p, 0.69), 2u);
  EXPECT_EQ(sample_index(p, 0.7), 3u);
  EXPECT_EQ(sample_index(p, 0.99999999), 3u);
  // rounding slack falls on the last positive mass
  EXPECT_EQ(sample_index({0.5, 0.49999999999, 0.0}, 0.9999999999999), 1u);
}

TEST(EstimateValue, SameSeedSameResult) {
  const auto model = kmdp::testing::two_start();
  const auto pi = random_history_policy(model, 5);
  const auto a = estimate_value(model, model.initial(), pi, 5000, 42);
  const auto b = estimate_value(model, model.initial(), pi, 5000, 42);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stddev, b.stddev);
  EXPECT_EQ(a.kill_rate, b.kill_rate);
  const auto c = estimate_value(model, model.initial(), pi, 5000, 43);
  EXPECT_NE(a.mean, c.mean);
}

TEST(EstimateValue, DegenerateModelHasNoVariance) {
  const auto model = build_model(parse_model_text(R"({
    "horizon": {"m": 0, "n": 1},
    "states": [[{"id": "s"}], [{"id": "k", "killed": true}, {"id": "t", "r": 2}]],
    "actions": [[{"id": "a", "owner": "s", "q": 1, "p": {"t": 1.0, "k": 0.0}}]],
    "allowZeroKill": true
  })"));
  const auto r = estimate_value(model, model.initial(), MarkovPolicy::uniform(model).as_general(), 1000, 1);
  EXPECT_EQ(r.mean, 3.0);
  EXPECT_EQ(r.stddev, 0.0);
  EXPECT_EQ(r.kill_rate, std::vector<double>{0.0});
}

TEST(EstimateValue, ZeroRewardsGiveExactlyZero) {
  auto j = kmdp::testing::m1_json();
  for (auto& a : j["actions"][0]) a["q"] = 0;
  j["states"][1][1]["r"] = 0;
  const auto model = build_model(parse_model_spec(j));
  const auto r = estimate_value(model, model.initial(), MarkovPolicy::uniform(model).as_general(), 2000, 9);
  EXPECT_EQ(r.mean, 0.0);
  EXPECT_EQ(r.stddev, 0.0);
}

TEST(EstimateValue, ReferenceModelKillFrequencyAndMean) {
  const auto model = m1();
  const std::uint64_t n = 100000;
  const auto r = estimate_value(model, model.initial(), m1_a1(model), n, 2024);
  EXPECT_LE(std::abs(r.kill_rate[0] - 0.1), 3.0 * std::sqrt(0.09 / static_cast<double>(n)));
  EXPECT_LE(std::abs(r.mean - 6.8), 5.0 * r.standard_error);
}

TEST(EstimateValue, RejectsSingleSample) {
  const auto model = m1();
  EXPECT_THROW(estimate_value(model, model.initial(), m1_a1(model), 1, 0), Error);
}

TEST(SampleOutcome, OutcomesAreConsistent) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto model = random_model(s);
    const auto pi = random_history_policy(model, s);
    CounterStream stream(s, 0);
    for (int i = 0; i < 50; ++i) EXPECT_NO_THROW(assess_outcome(model, sample_outcome(model, model.initial(), pi, stream)));
  }
}

TEST(SimProperties, UnbiasedAcrossSeeds) {
  // Average z-score over 50 seeds: mean of standardized errors has sd 1/sqrt(50).
  const auto model = kmdp::testing::two_start();
  const auto pi = MarkovPolicy::uniform(model).as_general();
  const double exact = assess_policy(model, model.initial(), pi);
  double z = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = estimate_value(model, model.initial(), pi, 2000, seed);
    z += (r.mean - exact) / r.standard_error;
  }
  EXPECT_LE(std::abs(z / 50.0), 5.0 / std::sqrt(50.0));
}
