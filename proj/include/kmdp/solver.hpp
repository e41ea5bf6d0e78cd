#pragma once

// Backward induction for the killed model.
//
// Operators are indexed by the stage of their input:
//   U_t : functions on X_t   -> functions on A_t      (one-step action assessment)
//   V_t : functions on A_t   -> functions on X_{t-1}  (per-state maximum)
//   T_psi_t : functions on X_t -> functions on X_{t-1} (backup under a fixed rule)
// Values at killed states are never stored (NaN); U and T_psi add the crash
// term explicitly.

#include <cmath>
#include <limits>
#include <vector>

#include "kmdp/core.hpp"
#include "kmdp/measure.hpp"
#include "kmdp/policy.hpp"

namespace kmdp {

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct ValueFunction {
  Stage stage = 0;
  std::vector<double> values;  // dense over X_stage; killed entries are NaN

  double operator[](StateIndex x) const { return values.at(x); }
};

struct ActionAssessment {
  Stage stage = 0;
  std::vector<double> values;  // dense over A_stage

  double operator[](ActionIndex a) const { return values.at(a); }
};

/// Value at x, with the killed-state extension nu(x*) = c(x*).
inline double value_or_crash(const KilledModel& model, const ValueFunction& f, StateIndex x) {
  return model.is_killed(f.stage, x) ? model.crash(f.stage) : f[x];
}

/// Dense terminal function: r on the non-killed states of X_last.
inline ValueFunction terminal_value(const KilledModel& model) {
  ValueFunction f{model.last(), terminal_rewards(model)};
  if (auto k = model.killed_state(model.last())) f.values[*k] = kUnset;
  return f;
}

namespace detail {

inline double backup(const KilledModel& model, Stage t, const Action& a, const ValueFunction& f) {
  double v = a.reward;
  const auto kill = model.killed_state(t);
  for (StateIndex y = 0; y < a.transition.size(); ++y) {
    if (kill && y == *kill) continue;
    if (a.transition[y] == 0.0) continue;
    v += a.transition[y] * f.values[y];
  }
  if (kill) v += a.transition[*kill] * model.crash(t);
  return v;
}

inline void require_stage(const ValueFunction& f, Stage t, const KilledModel& model) {
  if (f.stage != t || f.values.size() != model.states(t).size())
    throw StageError("value function does not live on stage " + std::to_string(t));
}

}  // namespace detail

/// Uf(a) = q(a) + sum_{y non-killed} p(y|a) f(y) + p(x*_t|a) c(x*_t) for a in A_t.
inline ActionAssessment operator_U(const KilledModel& model, Stage t, const ValueFunction& f) {
  detail::require_stage(f, t, model);
  if (t <= model.first()) throw StageError("U needs a stage with actions");
  ActionAssessment u{t, {}};
  for (const auto& a : model.actions(t)) u.values.push_back(detail::backup(model, t, a, f));
  return u;
}

struct MaximizedValue {
  ValueFunction value;             // on X_{t-1}
  std::vector<ActionIndex> witness;  // first maximizer in declared order; kNoIndex at killed states
};

/// Vg(x) = max_{a in A(x)} g(a) on X_{t-1}.
inline MaximizedValue operator_V(const KilledModel& model, Stage t, const ActionAssessment& g) {
  if (g.stage != t || g.values.size() != model.actions(t).size())
    throw StageError("action assessment does not live on stage " + std::to_string(t));
  const Stage prev = t - 1;
  const auto& xs = model.states(prev);
  MaximizedValue out{{prev, std::vector<double>(xs.size(), kUnset)}, std::vector<ActionIndex>(xs.size(), kNoIndex)};
  for (StateIndex x = 0; x < xs.size(); ++x) {
    if (xs[x].killed) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (ActionIndex a : model.available(prev, x)) {
      if (g[a] > best) {
        best = g[a];
        out.witness[x] = a;
      }
    }
    out.value.values[x] = best;
  }
  return out;
}

/// T_psi f(x) = q(psi(x)) + sum p(y|psi(x)) f(y) + p(x*|psi(x)) c(x*) on X_{t-1}.
inline ValueFunction operator_T_psi(const KilledModel& model, Stage t, const std::vector<ActionIndex>& psi,
                                    const ValueFunction& f) {
  detail::require_stage(f, t, model);
  const auto& xs = model.states(t - 1);
  if (psi.size() != xs.size()) throw StageError("decision rule does not cover stage " + std::to_string(t - 1));
  ValueFunction out{t - 1, std::vector<double>(xs.size(), kUnset)};
  for (StateIndex x = 0; x < xs.size(); ++x) {
    if (xs[x].killed) continue;
    const Action& a = model.action(t, psi[x]);
    if (a.owner != x) throw StageError("decision rule picks an action not available at " + xs[x].id);
    out.values[x] = detail::backup(model, t, a, f);
  }
  return out;
}

/// T_theta for a randomized Markov rule: the theta-weighted average of U f.
inline ValueFunction operator_T_markov(const KilledModel& model, Stage t, const MarkovPolicy& theta,
                                       const ValueFunction& f) {
  const auto u = operator_U(model, t, f);
  const auto& xs = model.states(t - 1);
  ValueFunction out{t - 1, std::vector<double>(xs.size(), kUnset)};
  for (StateIndex x = 0; x < xs.size(); ++x) {
    if (xs[x].killed) continue;
    double v = 0.0;
    for (const auto& w : theta.at(t, x)) v += w.probability * u[w.action];
    out.values[x] = v;
  }
  return out;
}

struct BackwardInduction {
  /// nu_t for t = first..last (index t - first); nu_last = r.
  std::vector<ValueFunction> values;
  /// u_t for t = first+1..last (index t - first - 1).
  std::vector<ActionAssessment> assessments;
  /// Argmax witnesses per decision stage, same indexing as assessments.
  std::vector<std::vector<ActionIndex>> witnesses;

  const ValueFunction& value(Stage t) const { return values.at(static_cast<std::size_t>(t - values.front().stage)); }
  const ActionAssessment& assessment(Stage t) const {
    return assessments.at(static_cast<std::size_t>(t - values.front().stage - 1));
  }
  /// The process assessment nu on the first stage.
  const ValueFunction& initial_value() const { return values.front(); }
};

/// nu_last = r; u_t = U nu_t; nu_{t-1} = V u_t for t = last..first+1.
inline BackwardInduction backward_induction(const KilledModel& model) {
  if (model.epochs() < 1) throw HorizonError("backward induction needs at least one decision epoch");
  const auto stages = static_cast<std::size_t>(model.epochs());
  BackwardInduction out;
  out.values.resize(stages + 1);
  out.assessments.resize(stages);
  out.witnesses.resize(stages);
  out.values.back() = terminal_value(model);
  for (Stage t = model.last(); t > model.first(); --t) {
    const auto s = static_cast<std::size_t>(t - model.first());
    out.assessments[s - 1] = operator_U(model, t, out.values[s]);
    auto maxed = operator_V(model, t, out.assessments[s - 1]);
    out.values[s - 1] = std::move(maxed.value);
    out.witnesses[s - 1] = std::move(maxed.witness);
  }
  return out;
}

/// nu(mu) = sum mu(x) nu(x); killed initial states contribute c.
inline double process_value(const KilledModel& model, const ValueFunction& nu, const std::vector<double>& initial) {
  double v = 0.0;
  for (StateIndex x = 0; x < initial.size(); ++x)
    if (initial[x] != 0.0) v += initial[x] * value_or_crash(model, nu, x);
  return v;
}

struct ExtractedPolicy {
  SimplePolicy policy;
  /// Uniform optimality certificate: omega(x, policy) >= nu(x) - epsilon.
  double epsilon = 0.0;
};

/// psi_t(x) = first a in A(x) (declared order) with u_t(a) >= nu_{t-1}(x) - chi_t.
/// `chi` holds one slack per decision stage first+1..last.
inline ExtractedPolicy extract_simple_policy(const KilledModel& model, const BackwardInduction& solved,
                                             const std::vector<double>& chi) {
  const auto stages = static_cast<std::size_t>(model.epochs());
  if (chi.size() != stages) throw StageError("one slack per decision stage is required");
  std::vector<std::vector<ActionIndex>> choices(stages);
  double epsilon = 0.0;
  for (std::size_t s = 0; s < stages; ++s) {
    if (!(chi[s] >= 0.0)) throw Error("slacks must be nonnegative");
    epsilon += chi[s];
    const Stage t = model.first() + static_cast<Stage>(s) + 1;
    const auto& nu = solved.value(t - 1);
    const auto& u = solved.assessment(t);
    choices[s].assign(model.states(t - 1).size(), kNoIndex);
    for (StateIndex x = 0; x < choices[s].size(); ++x) {
      if (model.is_killed(t - 1, x)) continue;
      const double target = nu[x] - chi[s];
      for (ActionIndex a : model.available(t - 1, x)) {
        if (at_least(u[a], target)) {
          choices[s][x] = a;
          break;
        }
      }
      if (choices[s][x] == kNoIndex) choices[s][x] = solved.witnesses[s][x];
    }
  }
  return {SimplePolicy(model.first(), std::move(choices)), epsilon};
}

inline ExtractedPolicy extract_simple_policy(const KilledModel& model, const std::vector<double>& chi) {
  return extract_simple_policy(model, backward_induction(model), chi);
}

/// omega(., phi) on every stage via repeated T_psi, starting from r.
inline std::vector<ValueFunction> evaluate_simple(const KilledModel& model, const SimplePolicy& phi) {
  std::vector<ValueFunction> out(static_cast<std::size_t>(model.epochs()) + 1);
  out.back() = terminal_value(model);
  for (Stage t = model.last(); t > model.first(); --t) {
    const auto s = static_cast<std::size_t>(t - model.first());
    out[s - 1] = operator_T_psi(model, t, phi.rule(t), out[s]);
  }
  return out;
}

/// omega(., theta) on every stage for a Markov policy.
inline std::vector<ValueFunction> evaluate_markov(const KilledModel& model, const MarkovPolicy& theta) {
  std::vector<ValueFunction> out(static_cast<std::size_t>(model.epochs()) + 1);
  out.back() = terminal_value(model);
  for (Stage t = model.last(); t > model.first(); --t) {
    const auto s = static_cast<std::size_t>(t - model.first());
    out[s - 1] = operator_T_markov(model, t, theta, out[s]);
  }
  return out;
}

/// nu^t_s[f] = (VU)^{t-s} f: optimal value on X_s with terminal function f on X_t.
inline ValueFunction dp_value(const KilledModel& model, Stage s, Stage t, const ValueFunction& f) {
  if (s >= t) throw StageError("dp_value needs s < t");
  if (s < model.first() || t > model.last()) throw StageError("dp_value stages outside the model horizon");
  detail::require_stage(f, t, model);
  ValueFunction v = f;
  for (Stage k = t; k > s; --k) v = operator_V(model, k, operator_U(model, k, v)).value;
  return v;
}

/// sum_a pi(a|x) (q(a) + omega'(p_a, pi_a)), with omega' evaluated on the
/// derived model (or r and c when only one epoch remains).
inline double fundamental_rhs(const KilledModel& model, StateIndex x, const GeneralPolicy& pi,
                              std::uint64_t cap = kDefaultOutcomeCap) {
  const Stage m = model.first();
  if (model.is_killed(m, x)) return model.crash(m);
  const Stage next = m + 1;
  const auto kill = model.killed_state(next);
  const bool single = model.epochs() == 1;
  KilledModel derived;
  if (!single) derived = derived_model(model);

  double total = 0.0;
  for (const auto& w : pi(History{m, {x}, {}})) {
    if (w.probability <= kStructuralZero) continue;
    const Action& a = model.action(next, w.action);
    GeneralPolicy pi_a;
    if (!single) pi_a = restrict_after_first(model, pi, x, w.action);
    double continuation = 0.0;
    for (StateIndex y = 0; y < a.transition.size(); ++y) {
      const double p = a.transition[y];
      if (p <= kStructuralZero) continue;
      if (kill && y == *kill) {
        continuation += p * model.crash(next);
      } else if (single) {
        continuation += p * model.state(next, y).terminal_reward;
      } else {
        continuation += p * assess_policy(derived, y, pi_a, cap);
      }
    }
    total += w.probability * (a.reward + continuation);
  }
  return total;
}

}  // namespace kmdp
