#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kmdp/kmdp.hpp"

namespace kmdp::testing {

inline const char* kM1 = R"({
  "horizon": {"m": 0, "n": 1},
  "states": [
    [{"id": "s0"}],
    [{"id": "x*", "killed": true}, {"id": "g", "r": 10}, {"id": "b", "r": 0}]
  ],
  "actions": [[
    {"id": "a1", "owner": "s0", "q": 1, "p": {"g": 0.6, "b": 0.3, "x*": 0.1}},
    {"id": "a2", "owner": "s0", "q": 2, "p": {"g": 0.3, "b": 0.3, "x*": 0.4}}
  ]]
})";

inline Json m1_json() { return Json::parse(kM1); }
inline ModelSpec m1_spec() { return parse_model_text(kM1); }
inline KilledModel m1() { return build_model(m1_spec()); }

/// Two initial states, two epochs, distinct killed ids per stage.
inline const char* kTwoStart = R"({
  "horizon": {"m": 0, "n": 2},
  "states": [
    [{"id": "u"}, {"id": "v"}],
    [{"id": "k1", "killed": true}, {"id": "p"}, {"id": "q"}],
    [{"id": "k2", "killed": true}, {"id": "w", "r": 3}, {"id": "z", "r": -1}]
  ],
  "actions": [
    [
      {"id": "u1", "owner": "u", "q": 1, "p": {"p": 0.5, "q": 0.4, "k1": 0.1}},
      {"id": "u2", "owner": "u", "q": 0, "p": {"p": 0.1, "q": 0.7, "k1": 0.2}},
      {"id": "v1", "owner": "v", "q": 2, "p": {"p": 0.3, "q": 0.3, "k1": 0.4}}
    ],
    [
      {"id": "p1", "owner": "p", "q": 0.5, "p": {"w": 0.8, "k2": 0.2}},
      {"id": "p2", "owner": "p", "q": 1.5, "p": {"w": 0.2, "z": 0.6, "k2": 0.2}},
      {"id": "q1", "owner": "q", "q": -1, "p": {"w": 0.5, "z": 0.4, "k2": 0.1}}
    ]
  ],
  "mu": {"u": 0.5, "v": 0.5}
})";

inline KilledModel two_start() { return build_model(parse_model_text(kTwoStart)); }

/// Hand-rolled path-sum oracle, independent of kmdp::for_each_outcome: walks
/// the probability tree with explicit recursion over (stage, state, running
/// reward) and a history vector.
inline double oracle_assess(const KilledModel& model, const std::vector<double>& mu, const GeneralPolicy& pi) {
  std::function<double(History&, double)> value = [&](History& h, double running) -> double {
    const Stage t = h.stage();
    const StateIndex x = h.current();
    if (model.states(t)[x].killed) return running + model.crash_table()[static_cast<std::size_t>(t - model.first())];
    if (t == model.last()) return running + model.states(t)[x].terminal_reward;
    double total = 0.0;
    for (const auto& w : pi(h)) {
      const Action& a = model.actions(t + 1)[w.action];
      h.actions.push_back(w.action);
      for (std::size_t y = 0; y < a.transition.size(); ++y) {
        if (a.transition[y] == 0.0 || w.probability == 0.0) continue;
        h.states.push_back(y);
        total += w.probability * a.transition[y] * value(h, running + a.reward);
        h.states.pop_back();
      }
      h.actions.pop_back();
    }
    return total;
  };
  double total = 0.0;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] == 0.0) continue;
    History h{model.first(), {x}, {}};
    total += mu[x] * value(h, 0.0);
  }
  return total;
}

}  // namespace kmdp::testing
