#pragma once

// Reduction of arbitrary policies to simple ones: conditional Markovization
// followed by stagewise dominance.

#include <vector>

#include "kmdp/core.hpp"
#include "kmdp/measure.hpp"
#include "kmdp/policy.hpp"
#include "kmdp/solver.hpp"

namespace kmdp {

/// theta_t(a|x) = P{a_t = a | x_{t-1} = x} under (initial, pi). States never
/// reached get a point mass on their first available action.
inline MarkovPolicy markovize(const KilledModel& model, const std::vector<double>& initial, const GeneralPolicy& pi,
                              std::uint64_t cap = kDefaultOutcomeCap) {
  const Stage m = model.first();
  const auto stages = static_cast<std::size_t>(model.epochs());
  // joint[s][x][a] = P{x_{t-1} = x, a_t = a}, t = m + s + 1
  std::vector<std::vector<std::vector<double>>> joint(stages);
  for (std::size_t s = 0; s < stages; ++s) {
    const Stage t = m + static_cast<Stage>(s) + 1;
    joint[s].assign(model.states(t - 1).size(), std::vector<double>(model.actions(t).size(), 0.0));
  }
  for_each_outcome(
      model, initial, pi,
      [&](const History& h, bool, double mass) {
        for (std::size_t i = 0; i < h.actions.size(); ++i) joint[i][h.states[i]][h.actions[i]] += mass;
      },
      cap);

  std::vector<std::vector<ActionDistribution>> rules(stages);
  for (std::size_t s = 0; s < stages; ++s) {
    const Stage t = m + static_cast<Stage>(s) + 1;
    rules[s].resize(model.states(t - 1).size());
    for (StateIndex x = 0; x < rules[s].size(); ++x) {
      if (model.is_killed(t - 1, x)) continue;
      const auto& avail = model.available(t - 1, x);
      double reach = 0.0;
      for (ActionIndex a : avail) reach += joint[s][x][a];
      if (reach <= kStructuralZero) {
        rules[s][x] = point_action(avail.front());
        continue;
      }
      for (ActionIndex a : avail)
        if (joint[s][x][a] > 0.0) rules[s][x].push_back({a, joint[s][x][a] / reach});
    }
  }
  return {m, std::move(rules)};
}

/// A simple policy phi with omega(x, phi) >= omega(x, theta) for every x.
///
/// Stage by stage, with f(a) = q(a) + omega'(p_a, theta') built from theta's
/// own continuation values, psi(x) is the first action of theta(.|x)'s support
/// (declared order) with f(a) >= sum_a theta(a|x) f(a). Such an action exists
/// because a mean is never above every point of its support; an empty
/// selection means the arithmetic broke down and raises InternalError.
inline SimplePolicy dominate_simple(const KilledModel& model, const MarkovPolicy& theta) {
  const Stage m = model.first();
  const auto stages = static_cast<std::size_t>(model.epochs());
  const auto theta_values = evaluate_markov(model, theta);
  std::vector<std::vector<ActionIndex>> choices(stages);
  for (std::size_t s = 0; s < stages; ++s) {
    const Stage t = m + static_cast<Stage>(s) + 1;
    const auto f = operator_U(model, t, theta_values[s + 1]);
    choices[s].assign(model.states(t - 1).size(), kNoIndex);
    for (StateIndex x = 0; x < choices[s].size(); ++x) {
      if (model.is_killed(t - 1, x)) continue;
      const auto& gamma = theta.at(t, x);
      double mean = 0.0;
      for (const auto& w : gamma) mean += w.probability * f[w.action];
      ActionIndex pick = kNoIndex;
      for (ActionIndex a : model.available(t - 1, x)) {
        bool in_support = false;
        for (const auto& w : gamma) in_support = in_support || (w.action == a && w.probability > kStructuralZero);
        if (in_support && at_least(f[a], mean)) {
          pick = a;
          break;
        }
      }
      if (pick == kNoIndex)
        throw InternalError("dominance selection is empty at state " + model.state(t - 1, x).id + " of stage " +
                            std::to_string(t - 1));
      choices[s][x] = pick;
    }
  }
  return {m, std::move(choices)};
}

}  // namespace kmdp
