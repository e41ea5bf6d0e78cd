#pragma once

// The augmented path space: exact enumeration of the outcome law induced by
// (model, initial distribution, policy), outcome assessment and expectations.
//
// Dynamics: from a non-killed x_{t-1} the policy draws a_t, then the process
// moves to y with probability p(y|a_t). Reaching the killed state ends the
// outcome, which is then worth the running rewards so far plus c(x*_t).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kmdp/core.hpp"
#include "kmdp/policy.hpp"

namespace kmdp {

class InconsistentOutcomeError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kDefaultOutcomeCap = 10'000'000;

/// A way x_m a x ... a x_n, or a prefix ending in the killed state of its
/// last stage. states.size() == actions.size() + 1 in both cases.
struct Outcome {
  Stage first = 0;
  std::vector<StateIndex> states;
  std::vector<ActionIndex> actions;
  bool killed = false;

  Stage last_stage() const { return first + static_cast<Stage>(actions.size()); }
  /// Kill stage, meaningful only when killed.
  Stage kill_stage() const { return last_stage(); }

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct WeightedOutcome {
  Outcome outcome;
  double mass = 0.0;
};

using OutcomeLaw = std::vector<WeightedOutcome>;

/// Running rewards plus terminal reward (survived) or crash value (killed).
inline double assess_outcome(const KilledModel& model, const Outcome& o) {
  if (o.first != model.first() || o.states.size() != o.actions.size() + 1)
    throw InconsistentOutcomeError("outcome shape does not match the model");
  const Stage end = o.last_stage();
  if (end > model.last() || (!o.killed && end != model.last()))
    throw InconsistentOutcomeError("outcome length does not match the horizon");
  double total = 0.0;
  for (std::size_t i = 0; i < o.actions.size(); ++i) {
    const Stage t = o.first + static_cast<Stage>(i) + 1;
    if (o.actions[i] >= model.actions(t).size()) throw InconsistentOutcomeError("unknown action in outcome");
    const Action& a = model.action(t, o.actions[i]);
    if (a.owner != o.states[i]) throw InconsistentOutcomeError("action not owned by the preceding state");
    total += a.reward;
  }
  for (std::size_t i = 0; i < o.states.size(); ++i) {
    const Stage t = o.first + static_cast<Stage>(i);
    if (o.states[i] >= model.states(t).size()) throw InconsistentOutcomeError("unknown state in outcome");
    const bool last = i + 1 == o.states.size();
    if (model.is_killed(t, o.states[i]) != (last && o.killed))
      throw InconsistentOutcomeError("killed state placement does not match the outcome kind");
  }
  if (o.killed) return total + model.crash(end);
  return total + model.state(end, o.states.back()).terminal_reward;
}

namespace detail {

template <class Visitor>
struct OutcomeWalker {
  const KilledModel& model;
  const GeneralPolicy& pi;
  Visitor& visit;
  std::uint64_t cap;
  std::uint64_t count = 0;
  History history;

  void emit(double mass, bool killed) {
    if (++count > cap)
      throw ExplosionError("outcome enumeration exceeded the cap of " + std::to_string(cap) + " outcomes");
    visit(history, killed, mass);
  }

  void walk(double mass) {
    const Stage t = history.stage();
    const StateIndex x = history.current();
    if (model.is_killed(t, x)) {
      emit(mass, true);
      return;
    }
    if (t == model.last()) {
      emit(mass, false);
      return;
    }
    const ActionDistribution rule = pi(history);
    for (const auto& w : rule) {
      if (w.probability <= kStructuralZero) continue;
      const Action& a = model.action(t + 1, w.action);
      if (a.owner != x) throw InconsistentOutcomeError("policy chose an action not available at the current state");
      history.actions.push_back(w.action);
      for (StateIndex y = 0; y < a.transition.size(); ++y) {
        const double p = a.transition[y];
        if (p <= kStructuralZero) continue;
        history.states.push_back(y);
        walk(mass * w.probability * p);
        history.states.pop_back();
      }
      history.actions.pop_back();
    }
  }
};

}  // namespace detail

/// Depth-first walk over every outcome with positive mass, in declared
/// state/action order. `visit(history, killed, mass)` sees the full path; for
/// killed outcomes the last state is the killed state.
template <class Visitor>
void for_each_outcome(const KilledModel& model, const std::vector<double>& initial, const GeneralPolicy& pi,
                      Visitor&& visit, std::uint64_t cap = kDefaultOutcomeCap) {
  detail::OutcomeWalker<std::remove_reference_t<Visitor>> walker{model, pi, visit, cap, 0, {}};
  for (StateIndex x = 0; x < initial.size(); ++x) {
    if (initial[x] <= kStructuralZero) continue;
    walker.history = History{model.first(), {x}, {}};
    walker.walk(initial[x]);
  }
}

inline OutcomeLaw enumerate_outcomes(const KilledModel& model, const std::vector<double>& initial,
                                     const GeneralPolicy& pi, std::uint64_t cap = kDefaultOutcomeCap) {
  OutcomeLaw law;
  for_each_outcome(
      model, initial, pi,
      [&](const History& h, bool killed, double mass) {
        law.push_back({Outcome{h.first, h.states, h.actions, killed}, mass});
      },
      cap);
  return law;
}

inline double expectation(const OutcomeLaw& law, const std::function<double(const Outcome&)>& xi) {
  double total = 0.0;
  for (const auto& w : law) total += w.mass * xi(w.outcome);
  return total;
}

inline double total_mass(const OutcomeLaw& law) {
  return expectation(law, [](const Outcome&) { return 1.0; });
}

/// omega(mu, pi): expected outcome assessment.
inline double assess_policy(const KilledModel& model, const std::vector<double>& initial, const GeneralPolicy& pi,
                            std::uint64_t cap = kDefaultOutcomeCap) {
  double total = 0.0;
  for_each_outcome(
      model, initial, pi,
      [&](const History& h, bool killed, double mass) {
        double value = 0.0;
        for (std::size_t i = 0; i < h.actions.size(); ++i)
          value += model.action(h.first + static_cast<Stage>(i) + 1, h.actions[i]).reward;
        const Stage end = h.stage();
        value += killed ? model.crash(end) : model.state(end, h.current()).terminal_reward;
        total += mass * value;
      },
      cap);
  return total;
}

/// omega(x, pi). A killed initial state is worth its crash value.
inline double assess_policy(const KilledModel& model, StateIndex x, const GeneralPolicy& pi,
                            std::uint64_t cap = kDefaultOutcomeCap) {
  return assess_policy(model, point_mass(model, x), pi, cap);
}

/// omega(x, pi) for every x of the first stage.
inline std::vector<double> assess_per_state(const KilledModel& model, const GeneralPolicy& pi,
                                            std::uint64_t cap = kDefaultOutcomeCap) {
  std::vector<double> out;
  for (StateIndex x = 0; x < model.states(model.first()).size(); ++x) out.push_back(assess_policy(model, x, pi, cap));
  return out;
}

/// Laws of x_t (t = first..last, killed states included) and of a_t
/// (t = first+1..last) under the outcome law.
struct Marginals {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> actions;
};

inline Marginals marginals(const KilledModel& model, const OutcomeLaw& law) {
  Marginals m;
  for (Stage t = model.first(); t <= model.last(); ++t) {
    m.states.emplace_back(model.states(t).size(), 0.0);
    m.actions.emplace_back(model.actions(t).size(), 0.0);
  }
  for (const auto& w : law) {
    for (std::size_t i = 0; i < w.outcome.states.size(); ++i) m.states[i][w.outcome.states[i]] += w.mass;
    for (std::size_t i = 0; i < w.outcome.actions.size(); ++i) m.actions[i + 1][w.outcome.actions[i]] += w.mass;
  }
  return m;
}

}  // namespace kmdp
