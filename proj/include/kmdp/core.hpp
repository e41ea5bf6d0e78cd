#pragma once

// Killed finite-horizon Markov decision process: the model tuple, crash
// function construction, structural validation and interval restriction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kmdp {

/// Probability masses must sum to one within this tolerance.
inline constexpr double kProbabilityTolerance = 1e-9;
/// Masses at or below this are structural zeros when enumerating supports.
inline constexpr double kStructuralZero = 1e-15;
/// Value comparisons (extraction, dominance) use this absolute/relative slack.
inline constexpr double kValueTolerance = 1e-9;

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

using Stage = int;
using StateIndex = std::size_t;
using ActionIndex = std::size_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A single broken invariant, located by stage and (optionally) item id.
struct Violation {
  std::string code;
  Stage stage = 0;
  std::string item;
  std::string message;

  std::string to_string() const {
    std::ostringstream os;
    os << code << " [stage " << stage;
    if (!item.empty()) os << ", " << item;
    os << "]: " << message;
    return os.str();
  }
};

class ValidationError : public Error {
 public:
  explicit ValidationError(Violation v) : Error(v.to_string()), violation_(std::move(v)) {}
  const Violation& violation() const noexcept { return violation_; }

 private:
  Violation violation_;
};

class HorizonError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  using Error::Error;
};

class ExplosionError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

/// Hybrid absolute/relative comparison: lhs >= rhs up to kValueTolerance.
inline bool at_least(double lhs, double rhs, double tol = kValueTolerance) {
  return lhs >= rhs - tol * std::max(1.0, std::abs(rhs));
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct State {
  std::string id;
  bool killed = false;
  /// Terminal reward r; meaningful only for non-killed states of the last stage.
  double terminal_reward = 0.0;
};

struct Action {
  std::string id;
  /// Index of the owning state in the previous stage, j(a).
  StateIndex owner = 0;
  /// Running reward q(a).
  double reward = 0.0;
  /// p(.|a), dense over the states of the action's stage (kill atom included).
  std::vector<double> transition;
};

/// The killed model on [first, last]. States of stage t are X_t; actions of
/// stage t (t > first) form A_t and move the process from X_{t-1} into X_t.
/// Construction checks only shapes and index ranges; semantic invariants are
/// reported by validate().
class KilledModel {
 public:
  KilledModel() = default;

  KilledModel(Stage first, Stage last, std::vector<std::vector<State>> states,
              std::vector<std::vector<Action>> actions, std::vector<double> crash,
              std::vector<double> initial, bool allow_zero_kill)
      : first_(first),
        last_(last),
        states_(std::move(states)),
        actions_(std::move(actions)),
        crash_(std::move(crash)),
        initial_(std::move(initial)),
        allow_zero_kill_(allow_zero_kill) {
    if (last_ < first_) throw HorizonError("model horizon must satisfy first <= last");
    const auto stages = static_cast<std::size_t>(last_ - first_ + 1);
    if (states_.size() != stages || actions_.size() != stages || crash_.size() != stages)
      throw ValidationError({"shape.stages", first_, "", "per-stage tables do not match horizon"});
    if (!actions_.front().empty())
      throw ValidationError({"shape.first_actions", first_, "", "first stage cannot carry actions"});
    if (initial_.size() != states_.front().size())
      throw ValidationError({"shape.initial", first_, "", "initial distribution size mismatch"});

    killed_.assign(stages, kNoIndex);
    available_.assign(stages, {});
    for (std::size_t s = 0; s < stages; ++s) {
      for (StateIndex x = 0; x < states_[s].size(); ++x)
        if (states_[s][x].killed && killed_[s] == kNoIndex) killed_[s] = x;
      available_[s].assign(states_[s].size(), {});
    }
    for (std::size_t s = 1; s < stages; ++s) {
      const Stage t = first_ + static_cast<Stage>(s);
      for (ActionIndex a = 0; a < actions_[s].size(); ++a) {
        const Action& act = actions_[s][a];
        if (act.owner >= states_[s - 1].size())
          throw ValidationError({"shape.owner", t, act.id, "owner index out of range"});
        if (act.transition.size() != states_[s].size())
          throw ValidationError({"shape.transition", t, act.id, "transition row size mismatch"});
        available_[s - 1][act.owner].push_back(a);
      }
    }
  }

  Stage first() const noexcept { return first_; }
  Stage last() const noexcept { return last_; }
  int epochs() const noexcept { return last_ - first_; }
  bool allow_zero_kill() const noexcept { return allow_zero_kill_; }

  const std::vector<State>& states(Stage t) const { return states_.at(offset(t)); }
  const State& state(Stage t, StateIndex x) const { return states(t).at(x); }
  /// A_t, the actions that lead into stage t. Empty for the first stage.
  const std::vector<Action>& actions(Stage t) const { return actions_.at(offset(t)); }
  const Action& action(Stage t, ActionIndex a) const { return actions(t).at(a); }

  /// A(x) for x in X_t: indices into actions(t + 1).
  const std::vector<ActionIndex>& available(Stage t, StateIndex x) const {
    return available_.at(offset(t)).at(x);
  }

  std::optional<StateIndex> killed_state(Stage t) const {
    const StateIndex k = killed_.at(offset(t));
    return k == kNoIndex ? std::nullopt : std::optional<StateIndex>(k);
  }
  bool is_killed(Stage t, StateIndex x) const { return states(t).at(x).killed; }

  /// Probability of the kill atom under action a of stage t.
  double kill_mass(Stage t, ActionIndex a) const {
    const auto k = killed_state(t);
    return k ? action(t, a).transition[*k] : 0.0;
  }

  /// c(x*_t). Zero for stages without a killed state.
  double crash(Stage t) const { return crash_.at(offset(t)); }
  const std::vector<double>& crash_table() const noexcept { return crash_; }

  const std::vector<double>& initial() const noexcept { return initial_; }

  std::size_t offset(Stage t) const {
    if (t < first_ || t > last_) {
      std::ostringstream os;
      os << "stage " << t << " outside [" << first_ << ", " << last_ << "]";
      throw StageError(os.str());
    }
    return static_cast<std::size_t>(t - first_);
  }

  std::optional<StateIndex> find_state(Stage t, const std::string& id) const {
    const auto& xs = states(t);
    for (StateIndex x = 0; x < xs.size(); ++x)
      if (xs[x].id == id) return x;
    return std::nullopt;
  }
  std::optional<ActionIndex> find_action(Stage t, const std::string& id) const {
    const auto& as = actions(t);
    for (ActionIndex a = 0; a < as.size(); ++a)
      if (as[a].id == id) return a;
    return std::nullopt;
  }

  /// Returns a copy with a different initial distribution (not validated).
  KilledModel with_initial(std::vector<double> initial) const {
    KilledModel copy = *this;
    if (initial.size() != states_.front().size())
      throw ValidationError({"shape.initial", first_, "", "initial distribution size mismatch"});
    copy.initial_ = std::move(initial);
    return copy;
  }

 private:
  Stage first_ = 0;
  Stage last_ = 0;
  std::vector<std::vector<State>> states_;
  std::vector<std::vector<Action>> actions_;
  std::vector<double> crash_;
  std::vector<double> initial_;
  bool allow_zero_kill_ = false;
  std::vector<StateIndex> killed_;
  std::vector<std::vector<std::vector<ActionIndex>>> available_;
};

/// c(x*_t) = -sum_{i=first+1}^{t} max_{a in A_i} q(a), for every stage t.
/// Stages without actions contribute nothing to the sum.
inline std::vector<double> bankruptcy_crash(const std::vector<std::vector<Action>>& actions) {
  std::vector<double> crash(actions.size(), 0.0);
  double cumulative = 0.0;
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (!actions[s].empty()) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& a : actions[s]) best = std::max(best, a.reward);
      cumulative += best;
    }
    crash[s] = -cumulative;
  }
  return crash;
}

/// Point mass on state x of the first stage.
inline std::vector<double> point_mass(const KilledModel& model, StateIndex x) {
  std::vector<double> mu(model.states(model.first()).size(), 0.0);
  mu.at(x) = 1.0;
  return mu;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Every violated invariant in deterministic order (stage, then file order).
/// An empty result means the model is valid.
inline std::vector<Violation> validate(const KilledModel& model) {
  std::vector<Violation> out;
  const Stage m = model.first();
  const Stage n = model.last();
  if (!(m < n)) {
    out.push_back({"horizon.order", m, "", "horizon needs m < n"});
    return out;
  }

  for (Stage t = m; t <= n; ++t) {
    const auto& xs = model.states(t);
    std::size_t killed = 0;
    for (StateIndex x = 0; x < xs.size(); ++x) {
      for (StateIndex y = 0; y < x; ++y)
        if (xs[y].id == xs[x].id)
          out.push_back({"state.duplicate", t, xs[x].id, "state id repeated within stage"});
      if (xs[x].killed) ++killed;
      if (t == n && !xs[x].killed && !std::isfinite(xs[x].terminal_reward))
        out.push_back({"reward.terminal", t, xs[x].id, "terminal reward is not finite"});
    }
    // The first stage of a derived (restricted) model keeps its killed state.
    if (t == m && killed > 1)
      out.push_back({"state.killed_count", t, "", "first stage has more than one killed state"});
    if (t > m && killed != 1)
      out.push_back({"state.killed_count", t, "", "stage must have exactly one killed state"});
    if (t > m && killed > 0 && !std::isfinite(model.crash(t)))
      out.push_back({"reward.crash", t, "", "crash value is not finite"});

    if (t < n) {
      for (StateIndex x = 0; x < xs.size(); ++x) {
        const auto& avail = model.available(t, x);
        if (xs[x].killed && !avail.empty())
          out.push_back({"action.killed_owner", t + 1, xs[x].id, "killed state owns actions"});
        if (!xs[x].killed && avail.empty())
          out.push_back({"state.no_actions", t, xs[x].id, "state without actions"});
      }
    }

    if (t > m) {
      const auto& as = model.actions(t);
      const auto kill = model.killed_state(t);
      for (ActionIndex a = 0; a < as.size(); ++a) {
        const Action& act = as[a];
        for (ActionIndex b = 0; b < a; ++b)
          if (as[b].id == act.id)
            out.push_back({"action.duplicate", t, act.id, "action id repeated within stage"});
        if (!std::isfinite(act.reward))
          out.push_back({"reward.running", t, act.id, "running reward is not finite"});
        double sum = 0.0;
        bool negative = false;
        for (double p : act.transition) {
          if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
          sum += p;
        }
        if (negative)
          out.push_back({"kernel.negative", t, act.id, "transition mass is negative or not finite"});
        if (std::abs(sum - 1.0) > kProbabilityTolerance) {
          std::ostringstream os;
          os << "transition row sums to " << sum;
          out.push_back({"kernel.row_sum", t, act.id, os.str()});
        }
        if (kill && !model.allow_zero_kill() && !(act.transition[*kill] > 0.0))
          out.push_back({"kernel.zero_kill", t, act.id, "kill probability must be strictly positive"});
      }
    }
  }

  const auto& mu = model.initial();
  double total = 0.0;
  bool negative = false;
  for (double p : mu) {
    if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
    total += p;
  }
  if (negative) out.push_back({"initial.negative", m, "", "initial mass is negative or not finite"});
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream os;
    os << "initial distribution sums to " << total;
    out.push_back({"initial.sum", m, "", os.str()});
  }
  return out;
}

inline void require_valid(const KilledModel& model) {
  auto v = validate(model);
  if (!v.empty()) throw ValidationError(std::move(v.front()));
}

// ---------------------------------------------------------------------------
// Interval restriction and the derived model
// ---------------------------------------------------------------------------

/// The model restricted to [from, to] with terminal reward `terminal` on X_to
/// (dense, killed entries ignored). Kernel, running rewards, killed states and
/// crash values of the kept stages are unchanged. The initial distribution is
/// a point mass on the first state of X_from.
inline KilledModel restrict_interval(const KilledModel& model, Stage from, Stage to,
                                     const std::vector<double>& terminal) {
  if (!(model.first() <= from && from < to && to <= model.last()))
    throw HorizonError("restriction needs first <= from < to <= last");
  std::vector<std::vector<State>> states;
  std::vector<std::vector<Action>> actions;
  std::vector<double> crash;
  for (Stage t = from; t <= to; ++t) {
    states.push_back(model.states(t));
    actions.push_back(t == from ? std::vector<Action>{} : model.actions(t));
    crash.push_back(model.crash(t));
  }
  auto& last = states.back();
  if (terminal.size() != last.size())
    throw ValidationError({"shape.terminal", to, "", "terminal reward size mismatch"});
  for (StateIndex x = 0; x < last.size(); ++x)
    last[x].terminal_reward = last[x].killed ? 0.0 : terminal[x];
  std::vector<double> mu(states.front().size(), 0.0);
  mu.front() = 1.0;
  return KilledModel(from, to, std::move(states), std::move(actions), std::move(crash), std::move(mu),
                     model.allow_zero_kill());
}

/// Terminal rewards r of the last stage, dense over X_n.
inline std::vector<double> terminal_rewards(const KilledModel& model) {
  std::vector<double> r;
  for (const auto& s : model.states(model.last())) r.push_back(s.terminal_reward);
  return r;
}

/// The derived model: X_m and A_{m+1} deleted, everything else kept.
inline KilledModel derived_model(const KilledModel& model) {
  if (model.epochs() < 2)
    throw HorizonError("derived model needs at least two decision epochs");
  return restrict_interval(model, model.first() + 1, model.last(), terminal_rewards(model));
}

}  // namespace kmdp
