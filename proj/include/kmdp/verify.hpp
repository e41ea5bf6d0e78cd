#pragma once

// Independent oracles and executable identities for the killed model.
//
// Every check reduces to a nonnegative discrepancy: an absolute difference for
// identities, the amount of violation for inequalities. A check passes when
// its discrepancy is within tolerance. Random instances are fully determined
// by a 64-bit seed; failing reports carry the seed and the model so they can
// be replayed.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kmdp/core.hpp"
#include "kmdp/measure.hpp"
#include "kmdp/model_io.hpp"
#include "kmdp/policy.hpp"
#include "kmdp/random.hpp"
#include "kmdp/reduction.hpp"
#include "kmdp/solver.hpp"

namespace kmdp {

class UnknownCheckError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kDefaultPolicyCap = 1'000'000;

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

struct RandomModelConfig {
  int min_epochs = 1;
  int max_epochs = 4;
  /// Per-stage state count, killed state included.
  int max_states = 4;
  /// Per-stage action count.
  int max_actions = 3;
  double reward_low = -5.0;
  double reward_high = 5.0;
  /// Kill mass drawn from (kill_low, kill_high].
  double kill_low = 0.05;
  double kill_high = 0.5;
  /// All kill masses zero, with the allowZeroKill flag set.
  bool zero_kill = false;
};

/// Random probability vector of the given size; a few entries may be zero
/// but at least one is positive.
inline std::vector<double> random_distribution(std::size_t size, CounterStream& rng, double zero_chance = 0.2) {
  std::vector<double> w(size, 0.0);
  double total = 0.0;
  for (auto& v : w) {
    v = rng.uniform() < zero_chance ? 0.0 : rng.uniform(0.05, 1.0);
    total += v;
  }
  if (total == 0.0) {
    w[rng.below(size)] = 1.0;
    total = 1.0;
  }
  for (auto& v : w) v /= total;
  return w;
}

/// A valid random model on [0, n]. Ids: states "s<t>.<i>", killed "k<t>",
/// actions "a<t>.<i>".
inline KilledModel random_model(CounterStream rng, const RandomModelConfig& cfg = {}) {
  const int n = rng.between(cfg.min_epochs, cfg.max_epochs);
  const int owners_cap = std::min(cfg.max_states, cfg.max_actions);
  std::vector<std::vector<State>> states(static_cast<std::size_t>(n) + 1);
  std::vector<std::vector<Action>> actions(static_cast<std::size_t>(n) + 1);

  for (int t = 0; t <= n; ++t) {
    auto& xs = states[static_cast<std::size_t>(t)];
    int live = 0;
    if (t == 0) {
      live = rng.between(1, owners_cap);
    } else {
      xs.push_back({"k" + std::to_string(t), true, 0.0});
      live = rng.between(1, t < n ? std::min(cfg.max_states - 1, cfg.max_actions) : cfg.max_states - 1);
    }
    for (int i = 0; i < live; ++i) {
      const double r = t == n ? rng.uniform(cfg.reward_low, cfg.reward_high) : 0.0;
      xs.push_back({"s" + std::to_string(t) + "." + std::to_string(i), false, r});
    }
    // Killed state position varies so index-order assumptions get exercised.
    if (t > 0 && xs.size() > 1) {
      const auto pos = rng.below(xs.size());
      std::swap(xs[0], xs[pos]);
    }
  }

  for (int t = 1; t <= n; ++t) {
    const auto& prev = states[static_cast<std::size_t>(t - 1)];
    const auto& here = states[static_cast<std::size_t>(t)];
    std::vector<StateIndex> owners;
    for (StateIndex x = 0; x < prev.size(); ++x)
      if (!prev[x].killed) owners.push_back(x);
    const int count = rng.between(static_cast<int>(owners.size()), cfg.max_actions);
    std::vector<StateIndex> owner_of(owners);
    while (static_cast<int>(owner_of.size()) < count) owner_of.push_back(owners[rng.below(owners.size())]);
    std::sort(owner_of.begin(), owner_of.end());

    std::vector<StateIndex> live;
    StateIndex kill = 0;
    for (StateIndex y = 0; y < here.size(); ++y) {
      if (here[y].killed) kill = y;
      else live.push_back(y);
    }
    auto& as = actions[static_cast<std::size_t>(t)];
    for (int i = 0; i < count; ++i) {
      Action a;
      a.id = "a" + std::to_string(t) + "." + std::to_string(i);
      a.owner = owner_of[static_cast<std::size_t>(i)];
      a.reward = rng.uniform(cfg.reward_low, cfg.reward_high);
      const double kill_mass = cfg.zero_kill ? 0.0 : cfg.kill_high - (cfg.kill_high - cfg.kill_low) * rng.uniform();
      const auto spread = random_distribution(live.size(), rng);
      a.transition.assign(here.size(), 0.0);
      a.transition[kill] = kill_mass;
      for (std::size_t j = 0; j < live.size(); ++j) a.transition[live[j]] = (1.0 - kill_mass) * spread[j];
      as.push_back(std::move(a));
    }
  }

  auto crash = bankruptcy_crash(actions);
  auto mu = random_distribution(states.front().size(), rng, 0.0);
  KilledModel model(0, n, std::move(states), std::move(actions), std::move(crash), std::move(mu), cfg.zero_kill);
  require_valid(model);
  return model;
}

inline KilledModel random_model(std::uint64_t seed, const RandomModelConfig& cfg = {}) {
  return random_model(CounterStream(seed, 0), cfg);
}

/// A randomized history-dependent policy: the rule at h is drawn from a
/// stream keyed by (seed, h), so it is a pure function of the history. About
/// a third of histories get a point mass.
inline GeneralPolicy random_history_policy(const KilledModel& model, std::uint64_t seed) {
  return GeneralPolicy([&model, seed](const History& h) {
    std::uint64_t key = hash_combine(seed, static_cast<std::uint64_t>(h.first));
    for (std::size_t i = 0; i < h.states.size(); ++i) {
      key = hash_combine(key, h.states[i]);
      if (i < h.actions.size()) key = hash_combine(key, h.actions[i] + 0x100);
    }
    CounterStream rng(key, 1);
    const auto& avail = model.available(h.stage(), h.current());
    if (rng.uniform() < 0.33) return point_action(avail[rng.below(avail.size())]);
    const auto w = random_distribution(avail.size(), rng);
    ActionDistribution d;
    for (std::size_t i = 0; i < avail.size(); ++i)
      if (w[i] > 0.0) d.push_back({avail[i], w[i]});
    return d;
  });
}

/// Deterministic but history-dependent: picks the available action whose
/// position matches the parity of the previous action's index.
inline GeneralPolicy parity_policy(const KilledModel& model) {
  return GeneralPolicy([&model](const History& h) {
    const auto& avail = model.available(h.stage(), h.current());
    const std::size_t parity = h.actions.empty() ? 0 : h.actions.back() % 2;
    return point_action(avail[parity % avail.size()]);
  });
}

inline MarkovPolicy random_markov_policy(const KilledModel& model, CounterStream rng) {
  std::vector<std::vector<ActionDistribution>> rules;
  for (Stage t = model.first(); t < model.last(); ++t) {
    auto& stage = rules.emplace_back(model.states(t).size());
    for (StateIndex x = 0; x < stage.size(); ++x) {
      if (model.is_killed(t, x)) continue;
      const auto& avail = model.available(t, x);
      const auto w = random_distribution(avail.size(), rng);
      for (std::size_t i = 0; i < avail.size(); ++i)
        if (w[i] > 0.0) stage[x].push_back({avail[i], w[i]});
    }
  }
  return {model.first(), std::move(rules)};
}

inline SimplePolicy random_simple_policy(const KilledModel& model, CounterStream rng) {
  std::vector<std::vector<ActionIndex>> choices;
  for (Stage t = model.first(); t < model.last(); ++t) {
    auto& stage = choices.emplace_back(model.states(t).size(), kNoIndex);
    for (StateIndex x = 0; x < stage.size(); ++x)
      if (!model.is_killed(t, x)) stage[x] = model.available(t, x)[rng.below(model.available(t, x).size())];
  }
  return {model.first(), std::move(choices)};
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Calls visit(phi) for every simple policy of the model.
template <class Visitor>
void for_each_simple_policy(const KilledModel& model, Visitor&& visit, std::uint64_t cap = kDefaultPolicyCap) {
  struct Slot {
    std::size_t stage;
    StateIndex state;
    const std::vector<ActionIndex>* options;
  };
  std::vector<Slot> slots;
  std::vector<std::vector<ActionIndex>> choices;
  double count = 1.0;
  for (Stage t = model.first(); t < model.last(); ++t) {
    const auto s = static_cast<std::size_t>(t - model.first());
    choices.emplace_back(model.states(t).size(), kNoIndex);
    for (StateIndex x = 0; x < model.states(t).size(); ++x) {
      if (model.is_killed(t, x)) continue;
      slots.push_back({s, x, &model.available(t, x)});
      choices[s][x] = model.available(t, x).front();
      count *= static_cast<double>(model.available(t, x).size());
    }
  }
  if (count > static_cast<double>(cap))
    throw ExplosionError("simple-policy enumeration exceeds the cap of " + std::to_string(cap));

  std::vector<std::size_t> digit(slots.size(), 0);
  while (true) {
    visit(SimplePolicy(model.first(), choices));
    std::size_t i = 0;
    for (; i < slots.size(); ++i) {
      if (++digit[i] < slots[i].options->size()) {
        choices[slots[i].stage][slots[i].state] = (*slots[i].options)[digit[i]];
        break;
      }
      digit[i] = 0;
      choices[slots[i].stage][slots[i].state] = slots[i].options->front();
    }
    if (i == slots.size()) break;
  }
}

/// max over simple policies of omega(x, phi), per initial state, each policy
/// evaluated by outcome enumeration. Killed initial states hold NaN.
inline ValueFunction brute_force_value(const KilledModel& model, std::uint64_t cap = kDefaultPolicyCap) {
  const Stage m = model.first();
  const auto& xs = model.states(m);
  ValueFunction best{m, std::vector<double>(xs.size(), -std::numeric_limits<double>::infinity())};
  for (StateIndex x = 0; x < xs.size(); ++x)
    if (xs[x].killed) best.values[x] = kUnset;
  for_each_simple_policy(
      model,
      [&](const SimplePolicy& phi) {
        const auto pi = phi.as_general();
        for (StateIndex x = 0; x < xs.size(); ++x)
          if (!xs[x].killed) best.values[x] = std::max(best.values[x], assess_policy(model, x, pi));
      },
      cap);
  return best;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CheckReport {
  std::string name;
  std::uint64_t instances = 0;
  double max_discrepancy = 0.0;
  double tolerance = kValueTolerance;
  bool passed = true;
  /// Replayable description of the worst failing instance.
  std::optional<Json> counterexample;

  /// Folds one instance into the report.
  void record(double discrepancy, const std::function<Json()>& describe) {
    ++instances;
    const bool ok = discrepancy <= tolerance;
    if (!ok && (passed || discrepancy > max_discrepancy)) counterexample = describe();
    passed = passed && ok;
    if (std::isnan(discrepancy)) {
      max_discrepancy = discrepancy;
      passed = false;
    } else if (!std::isnan(max_discrepancy)) {
      max_discrepancy = std::max(max_discrepancy, discrepancy);
    }
  }

  void merge(const CheckReport& other) {
    instances += other.instances;
    if (!other.passed && (passed || other.max_discrepancy > max_discrepancy)) counterexample = other.counterexample;
    passed = passed && other.passed;
    max_discrepancy = std::max(max_discrepancy, other.max_discrepancy);
  }
};

inline Json report_to_json(const CheckReport& r) {
  Json j = {{"check", r.name},
            {"instances", r.instances},
            {"maxDiscrepancy", r.max_discrepancy},
            {"tolerance", r.tolerance},
            {"passed", r.passed}};
  if (r.counterexample) j["counterexample"] = *r.counterexample;
  return j;
}

namespace detail {

inline double gap(double a, double b) { return std::abs(a - b); }
inline double shortfall(double value, double bound) { return std::max(0.0, bound - value); }

inline Json describe(const KilledModel& model) { return {{"model", model_to_json(model)}}; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-instance checks
// ---------------------------------------------------------------------------

/// Brute-force optimum against backward induction at every initial state.
inline CheckReport check_oracle(const KilledModel& model, double tol = kValueTolerance) {
  CheckReport r{"oracle", 0, 0.0, tol, true, std::nullopt};
  const auto nu = backward_induction(model).initial_value();
  const auto brute = brute_force_value(model);
  double d = 0.0;
  for (StateIndex x = 0; x < nu.values.size(); ++x)
    if (!model.is_killed(model.first(), x)) d = std::max(d, detail::gap(nu[x], brute[x]));
  r.record(d, [&] { return detail::describe(model); });
  return r;
}

/// omega(x, pi) against the fundamental right-hand side.
inline CheckReport check_fundamental(const KilledModel& model, StateIndex x, const GeneralPolicy& pi,
                                     double tol = kValueTolerance) {
  CheckReport r{"fundamental", 0, 0.0, tol, true, std::nullopt};
  const double d = detail::gap(assess_policy(model, x, pi), fundamental_rhs(model, x, pi));
  r.record(d, [&] {
    auto j = detail::describe(model);
    j["state"] = model.state(model.first(), x).id;
    return j;
  });
  return r;
}

/// Extracted policy under slacks chi: omega(x, phi) >= nu(x) - sum chi, and
/// equality when every slack is zero.
inline CheckReport check_extraction(const KilledModel& model, const std::vector<double>& chi,
                                    double tol = kValueTolerance) {
  CheckReport r{"extraction", 0, 0.0, tol, true, std::nullopt};
  const auto solved = backward_induction(model);
  const auto extracted = extract_simple_policy(model, solved, chi);
  const auto omega = assess_per_state(model, extracted.policy.as_general());
  const auto& nu = solved.initial_value();
  const bool exact = std::all_of(chi.begin(), chi.end(), [](double c) { return c == 0.0; });
  double d = 0.0;
  for (StateIndex x = 0; x < omega.size(); ++x) {
    if (model.is_killed(model.first(), x)) continue;
    d = std::max(d, exact ? detail::gap(omega[x], nu[x]) : detail::shortfall(omega[x], nu[x] - extracted.epsilon));
  }
  r.record(d, [&] {
    auto j = detail::describe(model);
    j["chi"] = chi;
    return j;
  });
  return r;
}

/// markovize preserves omega and every one-dimensional marginal;
/// dominate_simple never lowers omega at any initial state.
inline CheckReport check_sufficiency(const KilledModel& model, const std::vector<double>& initial,
                                     const GeneralPolicy& pi, double tol = kValueTolerance) {
  CheckReport r{"sufficiency", 0, 0.0, tol, true, std::nullopt};
  const auto theta = markovize(model, initial, pi);
  const auto theta_g = theta.as_general();
  const auto phi = dominate_simple(model, theta);
  const auto phi_g = phi.as_general();

  double d = detail::gap(assess_policy(model, initial, pi), assess_policy(model, initial, theta_g));
  d = std::max(d, detail::shortfall(assess_policy(model, initial, phi_g), assess_policy(model, initial, theta_g)));
  const auto theta_x = assess_per_state(model, theta_g);
  const auto phi_x = assess_per_state(model, phi_g);
  for (StateIndex x = 0; x < theta_x.size(); ++x) d = std::max(d, detail::shortfall(phi_x[x], theta_x[x]));

  const auto mp = marginals(model, enumerate_outcomes(model, initial, pi));
  const auto mq = marginals(model, enumerate_outcomes(model, initial, theta_g));
  for (std::size_t s = 0; s < mp.states.size(); ++s) {
    for (std::size_t i = 0; i < mp.states[s].size(); ++i) d = std::max(d, detail::gap(mp.states[s][i], mq.states[s][i]));
    for (std::size_t i = 0; i < mp.actions[s].size(); ++i)
      d = std::max(d, detail::gap(mp.actions[s][i], mq.actions[s][i]));
  }
  r.record(d, [&] {
    auto j = detail::describe(model);
    j["mu"] = initial;
    return j;
  });
  return r;
}

/// Splices rho (decisions up to stage k) with pi (a policy of [k, last]) and
/// checks the tail-expectation identity, the decomposition into a
/// zero-terminal-reward prefix plus omega(nu_k, pi), and the terminal-reward
/// form. Outcomes killed at or before k belong wholly to the prefix.
inline CheckReport check_markov_property(const KilledModel& model, const std::vector<double>& initial,
                                         const GeneralPolicy& rho, const GeneralPolicy& pi, Stage k,
                                         double tol = kValueTolerance) {
  CheckReport r{"markov", 0, 0.0, tol, true, std::nullopt};
  const Stage m = model.first();
  if (k < m || k >= model.last()) throw StageError("splice stage must lie in [first, last)");
  const auto spliced = splice(k, rho, pi);
  const auto offset = static_cast<std::size_t>(k - m);

  const KilledModel tail = k == m ? model : restrict_interval(model, k, model.last(), terminal_rewards(model));
  const auto& tail_states = tail.states(k);
  std::vector<double> tail_value(tail_states.size(), 0.0);
  for (StateIndex y = 0; y < tail_states.size(); ++y)
    tail_value[y] = tail_states[y].killed ? 0.0 : assess_policy(tail, y, pi);

  // nu_k(y) = P{x_k = y} for non-killed y, computed under rho alone.
  std::vector<double> reach(tail_states.size(), 0.0);
  double prefix_value = 0.0;
  double terminal_form = 0.0;
  if (k == m) {
    for (StateIndex y = 0; y < reach.size(); ++y) {
      if (tail_states[y].killed) {
        prefix_value += initial[y] * model.crash(m);
        terminal_form += initial[y] * model.crash(m);
      } else {
        reach[y] = initial[y];
        terminal_form += initial[y] * tail_value[y];
      }
    }
  } else {
    const auto prefix = restrict_interval(model, m, k, std::vector<double>(tail_states.size(), 0.0)).with_initial(initial);
    for (const auto& w : enumerate_outcomes(prefix, initial, rho))
      if (!w.outcome.killed) reach[w.outcome.states.back()] += w.mass;
    prefix_value = assess_policy(prefix, initial, rho);
    auto continued = restrict_interval(model, m, k, tail_value).with_initial(initial);
    terminal_form = assess_policy(continued, initial, rho);
  }

  double tail_from_reach = 0.0;
  for (StateIndex y = 0; y < reach.size(); ++y) tail_from_reach += reach[y] * tail_value[y];

  // Tail functional xi = sum_{t>k} q(a_t) + (r or c) on outcomes that reach x_k alive.
  const auto law = enumerate_outcomes(model, initial, spliced);
  const double tail_expect = expectation(law, [&](const Outcome& o) {
    if (o.states.size() <= offset || (o.killed && o.states.size() == offset + 1)) return 0.0;
    double v = 0.0;
    for (std::size_t i = offset; i < o.actions.size(); ++i)
      v += model.action(m + static_cast<Stage>(i) + 1, o.actions[i]).reward;
    return v + (o.killed ? model.crash(o.kill_stage()) : model.state(model.last(), o.states.back()).terminal_reward);
  });
  const double total = expectation(law, [&](const Outcome& o) { return assess_outcome(model, o); });

  double d = detail::gap(tail_expect, tail_from_reach);
  d = std::max(d, detail::gap(total, prefix_value + tail_from_reach));
  d = std::max(d, detail::gap(total, terminal_form));
  r.record(d, [&] {
    auto j = detail::describe(model);
    j["mu"] = initial;
    j["k"] = k;
    return j;
  });
  return r;
}

/// nu^n_0[r] = nu^t_0[nu^n_t[r]], and the policy spliced from optimal
/// policies of [first, t] (terminal nu^n_t) and [t, last] attains nu.
inline CheckReport check_dp_principle(const KilledModel& model, Stage t, double tol = kValueTolerance) {
  CheckReport r{"dp", 0, 0.0, tol, true, std::nullopt};
  const Stage m = model.first();
  const Stage n = model.last();
  if (t <= m || t > n) throw StageError("split stage must lie in (first, last]");
  const auto r_n = terminal_value(model);
  const auto whole = dp_value(model, m, n, r_n);
  const auto inner = t == n ? r_n : dp_value(model, t, n, r_n);
  const auto split = dp_value(model, m, t, inner);

  double d = 0.0;
  for (StateIndex x = 0; x < whole.values.size(); ++x)
    if (!model.is_killed(m, x)) d = std::max(d, detail::gap(whole[x], split[x]));

  auto head_model = restrict_interval(model, m, t, inner.values);
  const auto head = extract_simple_policy(head_model, std::vector<double>(static_cast<std::size_t>(t - m), 0.0));
  GeneralPolicy spliced = head.policy.as_general();
  if (t < n) {
    const auto tail_model = restrict_interval(model, t, n, r_n.values);
    const auto tail = extract_simple_policy(tail_model, std::vector<double>(static_cast<std::size_t>(n - t), 0.0));
    spliced = splice(t, spliced, tail.policy.as_general());
  }
  const auto omega = assess_per_state(model, spliced);
  for (StateIndex x = 0; x < omega.size(); ++x)
    if (!model.is_killed(m, x)) d = std::max(d, detail::gap(omega[x], whole[x]));
  r.record(d, [&] {
    auto j = detail::describe(model);
    j["t"] = t;
    return j;
  });
  return r;
}

/// Combines per-initial-state policies and checks
/// omega(mu, combined) >= nu(mu) - epsilon for every mu in `initials`.
inline CheckReport check_uniform_optimality(const KilledModel& model, const std::map<StateIndex, GeneralPolicy>& family,
                                            double epsilon, const std::vector<std::vector<double>>& initials,
                                            double tol = kValueTolerance) {
  CheckReport r{"uniform", 0, 0.0, tol, true, std::nullopt};
  const auto combined = combine(family);
  const auto nu = backward_induction(model).initial_value();
  double d = 0.0;
  for (const auto& mu : initials)
    d = std::max(d, detail::shortfall(assess_policy(model, mu, combined), process_value(model, nu, mu) - epsilon));
  r.record(d, [&] {
    auto j = detail::describe(model);
    j["epsilon"] = epsilon;
    j["initials"] = initials;
    return j;
  });
  return r;
}

// ---------------------------------------------------------------------------
// Seeded batch runs
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"oracle", "fundamental", "extraction", "sufficiency",
                                              "markov", "dp",          "uniform"};
  return names;
}

/// Runs one named check on `model` with auxiliary randomness from `aux`.
inline CheckReport run_check_instance(const std::string& name, const KilledModel& model, CounterStream aux,
                                      double tol = kValueTolerance) {
  const Stage m = model.first();
  const auto starts = model.states(m).size();
  auto random_initial = [&] { return random_distribution(starts, aux); };

  if (name == "oracle") return check_oracle(model, tol);
  if (name == "fundamental") {
    const auto pi = random_history_policy(model, aux.next());
    CheckReport r{name, 0, 0.0, tol, true, std::nullopt};
    for (StateIndex x = 0; x < starts; ++x)
      if (!model.is_killed(m, x)) r.merge(check_fundamental(model, x, pi, tol));
    CheckReport out{name, 0, 0.0, tol, true, std::nullopt};
    out.record(r.max_discrepancy, [&] { return detail::describe(model); });
    return out;
  }
  if (name == "extraction") {
    std::vector<double> chi(static_cast<std::size_t>(model.epochs()));
    const bool zero = aux.uniform() < 0.25;
    for (auto& c : chi) c = zero ? 0.0 : aux.uniform(0.0, 1.0);
    return check_extraction(model, chi, tol);
  }
  if (name == "sufficiency") {
    const auto mu = random_initial();
    const auto pi = aux.uniform() < 0.2 ? parity_policy(model) : random_history_policy(model, aux.next());
    return check_sufficiency(model, mu, pi, tol);
  }
  if (name == "markov") {
    const auto mu = random_initial();
    const Stage k = m + static_cast<Stage>(aux.below(static_cast<std::uint64_t>(model.epochs())));
    const auto rho = random_history_policy(model, aux.next());
    const auto pi = random_history_policy(model, aux.next());
    return check_markov_property(model, mu, rho, pi, k, tol);
  }
  if (name == "dp") {
    CheckReport out{name, 0, 0.0, tol, true, std::nullopt};
    double d = 0.0;
    for (Stage t = m + 1; t <= model.last(); ++t) d = std::max(d, check_dp_principle(model, t, tol).max_discrepancy);
    out.record(d, [&] { return detail::describe(model); });
    return out;
  }
  if (name == "uniform") {
    const auto solved = backward_induction(model);
    std::vector<double> chi(static_cast<std::size_t>(model.epochs()), 0.0);
    if (aux.uniform() < 0.5)
      for (auto& c : chi) c = aux.uniform(0.0, 1.0);
    // Branch x follows the extracted policy from x and an arbitrary simple
    // policy from every other initial state.
    const auto good = extract_simple_policy(model, solved, chi);
    const auto good_g = good.policy.as_general();
    std::map<StateIndex, GeneralPolicy> family;
    for (StateIndex x = 0; x < starts; ++x) {
      if (model.is_killed(m, x)) continue;
      const auto other = random_simple_policy(model, aux.split(x)).as_general();
      family.emplace(x, GeneralPolicy([x, good_g, other](const History& h) {
                       return h.initial() == x ? good_g(h) : other(h);
                     }));
    }
    const double epsilon = good.epsilon;
    std::vector<std::vector<double>> initials;
    for (int i = 0; i < 8; ++i) initials.push_back(random_initial());
    for (StateIndex x = 0; x < starts; ++x)
      if (!model.is_killed(m, x)) initials.push_back(point_mass(model, x));
    return check_uniform_optimality(model, family, epsilon, initials, tol);
  }
  throw UnknownCheckError("unknown check '" + name + "'");
}

/// Instance i uses model seed hash(seed, i); its auxiliary draws come from a
/// separate substream of the same instance seed.
inline std::uint64_t instance_seed(std::uint64_t seed, std::uint64_t i) { return hash_combine(mix64(seed), i); }

inline CheckReport run_check(const std::string& name, std::uint64_t seed, std::uint64_t count,
                             const RandomModelConfig& cfg = {}, double tol = kValueTolerance) {
  if (std::find(check_names().begin(), check_names().end(), name) == check_names().end())
    throw UnknownCheckError("unknown check '" + name + "'");
  CheckReport total{name, 0, 0.0, tol, true, std::nullopt};
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto s = instance_seed(seed, i);
    const auto model = random_model(CounterStream(s, 0), cfg);
    auto r = run_check_instance(name, model, CounterStream(s, 1), tol);
    if (r.counterexample) {
      (*r.counterexample)["check"] = name;
      (*r.counterexample)["instanceSeed"] = s;
      (*r.counterexample)["discrepancy"] = r.max_discrepancy;
    }
    total.merge(r);
  }
  return total;
}

/// Re-runs a dumped counterexample: the stored model plus the instance seed's
/// auxiliary stream reproduce the original discrepancy.
inline CheckReport replay_counterexample(const Json& counterexample, double tol = kValueTolerance) {
  const auto name = counterexample.at("check").get<std::string>();
  const auto s = counterexample.at("instanceSeed").get<std::uint64_t>();
  const auto model = build_model(parse_model_spec(counterexample.at("model")));
  return run_check_instance(name, model, CounterStream(s, 1), tol);
}

}  // namespace kmdp
