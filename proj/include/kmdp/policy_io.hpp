#pragma once

// JSON documents for simple and Markov policies, keyed by decision stage and
// then by state id:
//   {"kind": "simple", "stages": {"1": {"s0": "a1"}}}
//   {"kind": "markov", "stages": {"1": {"s0": {"a1": 0.5, "a2": 0.5}}}}

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "kmdp/model_io.hpp"
#include "kmdp/policy.hpp"

namespace kmdp {

/// The policy document does not fit the model (unknown ids, missing states,
/// unavailable actions, malformed distributions).
class PolicyError : public Error {
 public:
  using Error::Error;
};

using PolicyTable = std::variant<SimplePolicy, MarkovPolicy>;

inline Json policy_to_json(const KilledModel& model, const SimplePolicy& phi) {
  Json stages = Json::object();
  for (Stage t = phi.first() + 1; t <= phi.last(); ++t) {
    Json rule = Json::object();
    const auto& psi = phi.rule(t);
    for (StateIndex x = 0; x < psi.size(); ++x)
      if (psi[x] != kNoIndex) rule[model.state(t - 1, x).id] = model.action(t, psi[x]).id;
    stages[std::to_string(t)] = std::move(rule);
  }
  return {{"kind", "simple"}, {"stages", std::move(stages)}};
}

inline Json policy_to_json(const KilledModel& model, const MarkovPolicy& theta) {
  Json stages = Json::object();
  for (Stage t = theta.first() + 1; t <= theta.last(); ++t) {
    Json rule = Json::object();
    const auto& xs = model.states(t - 1);
    for (StateIndex x = 0; x < xs.size(); ++x) {
      if (xs[x].killed) continue;
      Json d = Json::object();
      for (const auto& w : theta.at(t, x)) d[model.action(t, w.action).id] = w.probability;
      rule[xs[x].id] = std::move(d);
    }
    stages[std::to_string(t)] = std::move(rule);
  }
  return {{"kind", "markov"}, {"stages", std::move(stages)}};
}

namespace detail {

inline const Json& policy_stage(const Json& stages, Stage t) {
  auto it = stages.find(std::to_string(t));
  if (it == stages.end() || !it->is_object()) throw PolicyError("policy has no rule for stage " + std::to_string(t));
  return *it;
}

inline ActionIndex policy_action(const KilledModel& model, Stage t, StateIndex x, const Json& id) {
  if (!id.is_string()) throw PolicyError("action ids must be strings");
  auto a = model.find_action(t, id.get<std::string>());
  if (!a) throw PolicyError("unknown action '" + id.get<std::string>() + "' at stage " + std::to_string(t));
  if (model.action(t, *a).owner != x)
    throw PolicyError("action '" + id.get<std::string>() + "' is not available at state '" + model.state(t - 1, x).id + "'");
  return *a;
}

}  // namespace detail

inline PolicyTable policy_from_json(const KilledModel& model, const Json& doc) {
  if (!doc.is_object()) throw PolicyError("policy document must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "kind" && it.key() != "stages") throw PolicyError("unknown key '" + it.key() + "' in policy");
  auto kind = doc.find("kind");
  auto stages = doc.find("stages");
  if (kind == doc.end() || !kind->is_string() || stages == doc.end() || !stages->is_object())
    throw PolicyError("policy needs a string 'kind' and an object 'stages'");
  const bool simple = *kind == "simple";
  if (!simple && *kind != "markov") throw PolicyError("policy kind must be 'simple' or 'markov'");

  for (auto it = stages->begin(); it != stages->end(); ++it) {
    bool known = false;
    for (Stage t = model.first() + 1; t <= model.last(); ++t) known = known || it.key() == std::to_string(t);
    if (!known) throw PolicyError("policy names unknown stage '" + it.key() + "'");
  }

  std::vector<std::vector<ActionIndex>> choices;
  std::vector<std::vector<ActionDistribution>> rules;
  for (Stage t = model.first() + 1; t <= model.last(); ++t) {
    const Json& rule = detail::policy_stage(*stages, t);
    const auto& xs = model.states(t - 1);
    for (auto it = rule.begin(); it != rule.end(); ++it) {
      auto x = model.find_state(t - 1, it.key());
      if (!x) throw PolicyError("unknown state '" + it.key() + "' at stage " + std::to_string(t - 1));
      if (xs[*x].killed) throw PolicyError("policy assigns an action to killed state '" + it.key() + "'");
    }
    auto& choice = choices.emplace_back(xs.size(), kNoIndex);
    auto& dists = rules.emplace_back(xs.size());
    for (StateIndex x = 0; x < xs.size(); ++x) {
      if (xs[x].killed) continue;
      auto entry = rule.find(xs[x].id);
      if (entry == rule.end())
        throw PolicyError("policy does not cover state '" + xs[x].id + "' at stage " + std::to_string(t - 1));
      if (simple) {
        choice[x] = detail::policy_action(model, t, x, *entry);
        continue;
      }
      if (!entry->is_object()) throw PolicyError("Markov rules must map action ids to probabilities");
      for (auto a = entry->begin(); a != entry->end(); ++a) {
        if (!a->is_number()) throw PolicyError("Markov rule probabilities must be numbers");
        dists[x].push_back({detail::policy_action(model, t, x, Json(a.key())), a->get<double>()});
      }
      if (!is_distribution_on(model, t - 1, x, dists[x]))
        throw PolicyError("rule at state '" + xs[x].id + "' is not a probability distribution");
    }
  }
  if (simple) return SimplePolicy(model.first(), std::move(choices));
  return MarkovPolicy(model.first(), std::move(rules));
}

inline PolicyTable load_policy(const KilledModel& model, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PolicyError("cannot open policy file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw PolicyError(std::string("malformed policy JSON: ") + e.what());
  }
  return policy_from_json(model, doc);
}

inline GeneralPolicy as_general(const PolicyTable& table) {
  return std::visit([](const auto& p) { return p.as_general(); }, table);
}

}  // namespace kmdp
