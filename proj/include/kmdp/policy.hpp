#pragma once

// Policies over the killed model: history-dependent randomized rules, Markov
// tables and simple (deterministic memoryless) tables, together with the
// combination, product and first-step restriction constructions.

#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "kmdp/core.hpp"

namespace kmdp {

class MissingBranchError : public Error {
 public:
  using Error::Error;
};

/// x_first a x a ... x_stage through non-killed states. Action indices are
/// into actions(t) of the stage they lead into.
struct History {
  Stage first = 0;
  std::vector<StateIndex> states;
  std::vector<ActionIndex> actions;

  Stage stage() const { return first + static_cast<Stage>(actions.size()); }
  StateIndex current() const { return states.back(); }
  StateIndex initial() const { return states.front(); }

  /// The history seen by a policy of the interval starting at `from`.
  History suffix_from(Stage from) const {
    const auto skip = static_cast<std::size_t>(from - first);
    History h{from, {}, {}};
    h.states.assign(states.begin() + static_cast<std::ptrdiff_t>(skip), states.end());
    h.actions.assign(actions.begin() + static_cast<std::ptrdiff_t>(skip), actions.end());
    return h;
  }
};

struct WeightedAction {
  ActionIndex action = 0;
  double probability = 0.0;

  friend bool operator==(const WeightedAction&, const WeightedAction&) = default;
};

/// Sparse distribution over the actions of one stage.
using ActionDistribution = std::vector<WeightedAction>;

inline ActionDistribution point_action(ActionIndex a) { return {{a, 1.0}}; }

inline ActionDistribution uniform_over(const std::vector<ActionIndex>& actions) {
  ActionDistribution d;
  for (auto a : actions) d.push_back({a, 1.0 / static_cast<double>(actions.size())});
  return d;
}

/// Checks support and normalization of a rule's output at state x of stage t.
inline bool is_distribution_on(const KilledModel& model, Stage t, StateIndex x, const ActionDistribution& d) {
  double total = 0.0;
  const auto& avail = model.available(t, x);
  for (const auto& w : d) {
    if (!(w.probability >= 0.0)) return false;
    if (std::find(avail.begin(), avail.end(), w.action) == avail.end() && w.probability > kStructuralZero)
      return false;
    total += w.probability;
  }
  return std::abs(total - 1.0) <= kProbabilityTolerance;
}

/// A history-dependent randomized policy. The rule must be a pure function
/// of the history.
class GeneralPolicy {
 public:
  using Rule = std::function<ActionDistribution(const History&)>;

  GeneralPolicy() = default;
  explicit GeneralPolicy(Rule rule) : rule_(std::make_shared<Rule>(std::move(rule))) {}

  ActionDistribution operator()(const History& h) const { return (*rule_)(h); }
  explicit operator bool() const noexcept { return rule_ != nullptr; }

 private:
  std::shared_ptr<const Rule> rule_;
};

/// theta_t(.|x) for each decision stage t in (first, last] and x in X_{t-1}.
class MarkovPolicy {
 public:
  MarkovPolicy() = default;
  MarkovPolicy(Stage first, std::vector<std::vector<ActionDistribution>> rules)
      : first_(first), rules_(std::move(rules)) {}

  /// Uniform over A(x) at every non-killed state.
  static MarkovPolicy uniform(const KilledModel& model) {
    std::vector<std::vector<ActionDistribution>> rules;
    for (Stage t = model.first(); t < model.last(); ++t) {
      auto& stage = rules.emplace_back(model.states(t).size());
      for (StateIndex x = 0; x < stage.size(); ++x)
        if (!model.is_killed(t, x)) stage[x] = uniform_over(model.available(t, x));
    }
    return {model.first(), std::move(rules)};
  }

  Stage first() const noexcept { return first_; }
  Stage last() const noexcept { return first_ + static_cast<Stage>(rules_.size()); }

  /// Rule of decision stage t (action in A_t) at x in X_{t-1}.
  const ActionDistribution& at(Stage t, StateIndex x) const {
    if (t <= first_ || t > last()) throw StageError("Markov policy queried outside its decision stages");
    return rules_[static_cast<std::size_t>(t - first_ - 1)].at(x);
  }
  const std::vector<std::vector<ActionDistribution>>& rules() const noexcept { return rules_; }

  GeneralPolicy as_general() const {
    auto self = std::make_shared<const MarkovPolicy>(*this);
    return GeneralPolicy([self](const History& h) { return self->at(h.stage() + 1, h.current()); });
  }

  friend bool operator==(const MarkovPolicy&, const MarkovPolicy&) = default;

 private:
  Stage first_ = 0;
  std::vector<std::vector<ActionDistribution>> rules_;
};

/// phi_t(x) for each decision stage t in (first, last]; killed states hold kNoIndex.
class SimplePolicy {
 public:
  SimplePolicy() = default;
  SimplePolicy(Stage first, std::vector<std::vector<ActionIndex>> choices)
      : first_(first), choices_(std::move(choices)) {}

  Stage first() const noexcept { return first_; }
  Stage last() const noexcept { return first_ + static_cast<Stage>(choices_.size()); }

  ActionIndex at(Stage t, StateIndex x) const {
    if (t <= first_ || t > last()) throw StageError("simple policy queried outside its decision stages");
    return choices_[static_cast<std::size_t>(t - first_ - 1)].at(x);
  }
  /// psi_t, the decision rule of stage t.
  const std::vector<ActionIndex>& rule(Stage t) const {
    if (t <= first_ || t > last()) throw StageError("simple policy queried outside its decision stages");
    return choices_[static_cast<std::size_t>(t - first_ - 1)];
  }
  const std::vector<std::vector<ActionIndex>>& choices() const noexcept { return choices_; }

  MarkovPolicy as_markov() const {
    std::vector<std::vector<ActionDistribution>> rules;
    for (const auto& stage : choices_) {
      auto& out = rules.emplace_back(stage.size());
      for (std::size_t x = 0; x < stage.size(); ++x)
        if (stage[x] != kNoIndex) out[x] = point_action(stage[x]);
    }
    return {first_, std::move(rules)};
  }

  GeneralPolicy as_general() const {
    auto self = std::make_shared<const SimplePolicy>(*this);
    return GeneralPolicy([self](const History& h) { return point_action(self->at(h.stage() + 1, h.current())); });
  }

  friend bool operator==(const SimplePolicy&, const SimplePolicy&) = default;

 private:
  Stage first_ = 0;
  std::vector<std::vector<ActionIndex>> choices_;
};

/// True iff phi_t(x) is in A(x) for every non-killed x and every decision stage.
inline bool is_admissible(const KilledModel& model, const SimplePolicy& phi) {
  if (phi.first() != model.first() || phi.last() != model.last()) return false;
  for (Stage t = model.first() + 1; t <= model.last(); ++t) {
    const auto& rule = phi.rule(t);
    if (rule.size() != model.states(t - 1).size()) return false;
    for (StateIndex x = 0; x < rule.size(); ++x) {
      if (model.is_killed(t - 1, x)) continue;
      const auto& avail = model.available(t - 1, x);
      if (std::find(avail.begin(), avail.end(), rule[x]) == avail.end()) return false;
    }
  }
  return true;
}

/// Follows family[x] from initial state x. `initial`, when given, must be
/// covered on its support; uncovered initial states throw on query.
inline GeneralPolicy combine(std::map<StateIndex, GeneralPolicy> family,
                             const std::vector<double>* initial = nullptr) {
  if (initial)
    for (StateIndex x = 0; x < initial->size(); ++x)
      if ((*initial)[x] > 0.0 && !family.count(x))
        throw MissingBranchError("no branch policy for initial state index " + std::to_string(x));
  auto branches = std::make_shared<const std::map<StateIndex, GeneralPolicy>>(std::move(family));
  return GeneralPolicy([branches](const History& h) {
    auto it = branches->find(h.initial());
    if (it == branches->end())
      throw MissingBranchError("no branch policy for initial state index " + std::to_string(h.initial()));
    return it->second(h);
  });
}

/// gamma at the first decision, then the derived-model policy on the
/// history with the leading "x a" removed.
inline GeneralPolicy product(Stage first, std::vector<ActionDistribution> gamma, GeneralPolicy derived) {
  auto g = std::make_shared<const std::vector<ActionDistribution>>(std::move(gamma));
  return GeneralPolicy([first, g, derived](const History& h) {
    if (h.first != first) throw StageError("product policy queried with a history not starting at its first stage");
    if (h.actions.empty()) return g->at(h.current());
    return derived(h.suffix_from(first + 1));
  });
}

/// Simple-policy product psi phi' where phi' is a simple policy of the derived model.
inline SimplePolicy product(Stage first, const std::vector<ActionIndex>& psi, const SimplePolicy& derived) {
  if (derived.first() != first + 1) throw StageError("derived policy must start one stage later");
  std::vector<std::vector<ActionIndex>> choices{psi};
  for (const auto& c : derived.choices()) choices.push_back(c);
  return {first, std::move(choices)};
}

/// pi_a on the derived model: h' -> pi(x a h').
inline GeneralPolicy restrict_after_first(const KilledModel& model, GeneralPolicy pi, StateIndex x, ActionIndex a) {
  const Stage first = model.first();
  const auto& avail = model.available(first, x);
  if (std::find(avail.begin(), avail.end(), a) == avail.end())
    throw StageError("restrict_after_first: action is not available at the initial state");
  return GeneralPolicy([first, pi, x, a](const History& h) {
    if (h.first != first + 1) throw StageError("restricted policy expects derived-model histories");
    History full{first, {x}, {a}};
    full.states.insert(full.states.end(), h.states.begin(), h.states.end());
    full.actions.insert(full.actions.end(), h.actions.begin(), h.actions.end());
    return pi(full);
  });
}

/// rho on decision stages up to k, then pi (a policy of [k, last]) on the
/// history suffix starting at x_k.
inline GeneralPolicy splice(Stage k, GeneralPolicy rho, GeneralPolicy pi) {
  return GeneralPolicy([k, rho, pi](const History& h) {
    if (h.stage() < k) return rho(h);
    return pi(h.suffix_from(k));
  });
}

}  // namespace kmdp
