#pragma once

// JSON model documents: parsing into a declarative ModelSpec, reference
// resolution, model construction, and serialization back to JSON.
//
// Document layout:
//   {
//     "horizon": {"m": 0, "n": 2},
//     "states":  [[{"id": "s0"}], [{"id": "k1", "killed": true}, ...], ...],
//     "actions": [[{"id": "a", "owner": "s0", "q": 1.0, "p": {"k1": 0.1, ...}}], ...],
//     "crash":   {"k1": -2.0, "2:k2": -3.0},
//     "mu":      {"s0": 1.0},
//     "allowZeroKill": false
//   }
// `states` has one array per stage m..n, `actions` one array per stage m+1..n.
// Crash keys are either a killed-state id (applies at every stage whose killed
// state has that id) or "<stage>:<id>".

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kmdp/core.hpp"

namespace kmdp {

using Json = nlohmann::ordered_json;

/// The document is not a well-formed model file (syntax or schema).
class ParseError : public Error {
 public:
  using Error::Error;
};

struct StateSpec {
  std::string id;
  bool killed = false;
  std::optional<double> terminal_reward;
};

struct ActionSpec {
  std::string id;
  std::string owner;
  double reward = 0.0;
  std::vector<std::pair<std::string, double>> transition;
};

struct ModelSpec {
  Stage m = 0;
  Stage n = 1;
  std::vector<std::vector<StateSpec>> states;   // stages m..n
  std::vector<std::vector<ActionSpec>> actions;  // stages m+1..n
  std::vector<std::pair<std::string, double>> crash;
  std::optional<std::vector<std::pair<std::string, double>>> initial;
  bool allow_zero_kill = false;
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ParseError("unknown key '" + it.key() + "' in " + where);
  }
}

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing key '") + key + "' in " + where);
  return *it;
}

inline double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError("expected a number at " + where);
  return v.get<double>();
}

inline std::string text(const Json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError("expected a string at " + where);
  return v.get<std::string>();
}

inline std::vector<std::pair<std::string, double>> mass_map(const Json& v, const std::string& where) {
  if (!v.is_object()) throw ParseError("expected an object at " + where);
  std::vector<std::pair<std::string, double>> out;
  for (auto it = v.begin(); it != v.end(); ++it) out.emplace_back(it.key(), number(*it, where + "." + it.key()));
  return out;
}

}  // namespace detail

inline ModelSpec parse_model_spec(const Json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ParseError("model document must be a JSON object");
  reject_unknown_keys(doc, {"horizon", "states", "actions", "crash", "mu", "allowZeroKill"}, "model");

  ModelSpec spec;
  const Json& horizon = require(doc, "horizon", "model");
  if (!horizon.is_object()) throw ParseError("horizon must be an object");
  reject_unknown_keys(horizon, {"m", "n"}, "horizon");
  const Json& jm = require(horizon, "m", "horizon");
  const Json& jn = require(horizon, "n", "horizon");
  if (!jm.is_number_integer() || !jn.is_number_integer()) throw ParseError("horizon bounds must be integers");
  spec.m = jm.get<Stage>();
  spec.n = jn.get<Stage>();
  if (spec.n <= spec.m) throw ParseError("horizon needs m < n");
  const auto stages = static_cast<std::size_t>(spec.n - spec.m + 1);

  const Json& states = require(doc, "states", "model");
  if (!states.is_array() || states.size() != stages)
    throw ParseError("states must be an array with one entry per stage m..n");
  for (std::size_t s = 0; s < stages; ++s) {
    const Stage t = spec.m + static_cast<Stage>(s);
    const std::string where = "states[" + std::to_string(s) + "]";
    if (!states[s].is_array()) throw ParseError(where + " must be an array");
    auto& out = spec.states.emplace_back();
    for (std::size_t i = 0; i < states[s].size(); ++i) {
      const Json& js = states[s][i];
      const std::string w = where + "[" + std::to_string(i) + "]";
      if (!js.is_object()) throw ParseError(w + " must be an object");
      reject_unknown_keys(js, {"id", "killed", "r"}, w);
      StateSpec st;
      st.id = text(require(js, "id", w), w + ".id");
      if (auto k = js.find("killed"); k != js.end()) {
        if (!k->is_boolean()) throw ParseError(w + ".killed must be a boolean");
        st.killed = k->get<bool>();
      }
      if (auto r = js.find("r"); r != js.end()) {
        if (t != spec.n) throw ParseError(w + ": terminal reward allowed only at stage n");
        if (st.killed) throw ParseError(w + ": killed state cannot carry a terminal reward");
        st.terminal_reward = number(*r, w + ".r");
      }
      out.push_back(std::move(st));
    }
  }

  const Json& actions = require(doc, "actions", "model");
  if (!actions.is_array() || actions.size() != stages - 1)
    throw ParseError("actions must be an array with one entry per stage m+1..n");
  for (std::size_t s = 0; s + 1 < stages; ++s) {
    const std::string where = "actions[" + std::to_string(s) + "]";
    if (!actions[s].is_array()) throw ParseError(where + " must be an array");
    auto& out = spec.actions.emplace_back();
    for (std::size_t i = 0; i < actions[s].size(); ++i) {
      const Json& ja = actions[s][i];
      const std::string w = where + "[" + std::to_string(i) + "]";
      if (!ja.is_object()) throw ParseError(w + " must be an object");
      reject_unknown_keys(ja, {"id", "owner", "q", "p"}, w);
      ActionSpec a;
      a.id = text(require(ja, "id", w), w + ".id");
      a.owner = text(require(ja, "owner", w), w + ".owner");
      a.reward = number(require(ja, "q", w), w + ".q");
      a.transition = mass_map(require(ja, "p", w), w + ".p");
      out.push_back(std::move(a));
    }
  }

  if (auto c = doc.find("crash"); c != doc.end()) spec.crash = mass_map(*c, "crash");
  if (auto mu = doc.find("mu"); mu != doc.end()) spec.initial = mass_map(*mu, "mu");
  if (auto z = doc.find("allowZeroKill"); z != doc.end()) {
    if (!z->is_boolean()) throw ParseError("allowZeroKill must be a boolean");
    spec.allow_zero_kill = z->get<bool>();
  }
  return spec;
}

inline ModelSpec parse_model_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return parse_model_spec(doc);
}

inline ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model_text(buf.str());
}

namespace detail {

inline std::optional<std::size_t> index_of(const std::vector<StateSpec>& xs, const std::string& id) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i].id == id) return i;
  return std::nullopt;
}

struct CrashKey {
  std::optional<Stage> stage;
  std::string id;
};

inline CrashKey split_crash_key(const std::string& key) {
  const auto colon = key.find(':');
  if (colon != std::string::npos && colon > 0) {
    const std::string head = key.substr(0, colon);
    if (head.find_first_not_of("-0123456789") == std::string::npos) {
      try {
        return {std::stoi(head), key.substr(colon + 1)};
      } catch (const std::exception&) {
      }
    }
  }
  return {std::nullopt, key};
}

}  // namespace detail

/// Id references that cannot be resolved (owners, successors, crash and mu
/// keys) plus missing terminal rewards.
inline std::vector<Violation> check_references(const ModelSpec& spec) {
  std::vector<Violation> out;
  const auto stages = spec.states.size();
  for (std::size_t s = 0; s + 1 < stages; ++s) {
    const Stage t = spec.m + static_cast<Stage>(s) + 1;
    for (const auto& a : spec.actions[s]) {
      if (!detail::index_of(spec.states[s], a.owner))
        out.push_back({"ref.owner", t, a.id, "owner '" + a.owner + "' is not a state of stage " + std::to_string(t - 1)});
      for (const auto& [y, p] : a.transition)
        if (!detail::index_of(spec.states[s + 1], y))
          out.push_back({"ref.successor", t, a.id, "successor '" + y + "' is not a state of stage " + std::to_string(t)});
    }
  }
  for (const auto& st : spec.states.back())
    if (!st.killed && !st.terminal_reward)
      out.push_back({"reward.terminal_missing", spec.n, st.id, "non-killed terminal state has no r"});
  for (const auto& [key, value] : spec.crash) {
    const auto k = detail::split_crash_key(key);
    bool found = false;
    for (std::size_t s = 0; s < stages; ++s) {
      const Stage t = spec.m + static_cast<Stage>(s);
      if (k.stage && *k.stage != t) continue;
      for (const auto& st : spec.states[s]) found = found || (st.killed && st.id == k.id);
    }
    if (!found) out.push_back({"ref.crash", k.stage.value_or(spec.m), key, "crash key names no killed state"});
  }
  if (spec.initial)
    for (const auto& [id, p] : *spec.initial)
      if (!detail::index_of(spec.states.front(), id))
        out.push_back({"ref.mu", spec.m, id, "initial mass on unknown state"});
  return out;
}

/// Assembles the indexed model. References must already resolve.
inline KilledModel assemble_model(const ModelSpec& spec) {
  if (auto refs = check_references(spec); !refs.empty()) throw ValidationError(refs.front());
  const auto stages = spec.states.size();
  std::vector<std::vector<State>> states(stages);
  std::vector<std::vector<Action>> actions(stages);
  for (std::size_t s = 0; s < stages; ++s)
    for (const auto& st : spec.states[s]) states[s].push_back({st.id, st.killed, st.terminal_reward.value_or(0.0)});
  for (std::size_t s = 1; s < stages; ++s) {
    for (const auto& as : spec.actions[s - 1]) {
      Action a;
      a.id = as.id;
      a.owner = *detail::index_of(spec.states[s - 1], as.owner);
      a.reward = as.reward;
      a.transition.assign(states[s].size(), 0.0);
      for (const auto& [y, p] : as.transition) a.transition[*detail::index_of(spec.states[s], y)] = p;
      actions[s].push_back(std::move(a));
    }
  }

  auto crash = bankruptcy_crash(actions);
  for (const auto& [key, value] : spec.crash) {
    const auto k = detail::split_crash_key(key);
    for (std::size_t s = 0; s < stages; ++s) {
      const Stage t = spec.m + static_cast<Stage>(s);
      if (k.stage && *k.stage != t) continue;
      for (const auto& st : spec.states[s])
        if (st.killed && st.id == k.id) crash[s] = value;
    }
  }

  std::vector<double> mu(states.front().size(), 0.0);
  if (spec.initial) {
    for (const auto& [id, p] : *spec.initial) mu[*detail::index_of(spec.states.front(), id)] = p;
  } else if (!mu.empty()) {
    mu.front() = 1.0;
  }
  return KilledModel(spec.m, spec.n, std::move(states), std::move(actions), std::move(crash), std::move(mu),
                     spec.allow_zero_kill);
}

/// Reference problems followed by model invariants; empty iff the ModelSpec builds.
inline std::vector<Violation> validate_spec(const ModelSpec& spec) {
  auto refs = check_references(spec);
  if (!refs.empty()) return refs;
  try {
    return validate(assemble_model(spec));
  } catch (const ValidationError& e) {
    return {e.violation()};
  }
}

/// Builds and validates a model; throws ValidationError on the first violation.
inline KilledModel build_model(const ModelSpec& spec) {
  auto model = assemble_model(spec);
  require_valid(model);
  return model;
}

inline KilledModel load_model(const std::string& path) { return build_model(load_model_spec(path)); }

/// Serializes a model. Crash values are written per stage so the document
/// reproduces the model exactly; `mu` is omitted when include_initial is false.
inline Json model_to_json(const KilledModel& model, bool include_initial = true) {
  Json doc;
  doc["horizon"] = {{"m", model.first()}, {"n", model.last()}};
  Json states = Json::array();
  Json actions = Json::array();
  Json crash = Json::object();
  for (Stage t = model.first(); t <= model.last(); ++t) {
    Json stage = Json::array();
    for (const auto& s : model.states(t)) {
      Json js = {{"id", s.id}};
      if (s.killed) js["killed"] = true;
      if (t == model.last() && !s.killed) js["r"] = s.terminal_reward;
      stage.push_back(std::move(js));
    }
    states.push_back(std::move(stage));
    if (auto k = model.killed_state(t)) crash[std::to_string(t) + ":" + model.state(t, *k).id] = model.crash(t);
    if (t == model.first()) continue;
    Json acts = Json::array();
    for (const auto& a : model.actions(t)) {
      Json p = Json::object();
      for (StateIndex y = 0; y < a.transition.size(); ++y)
        if (a.transition[y] != 0.0) p[model.state(t, y).id] = a.transition[y];
      acts.push_back({{"id", a.id}, {"owner", model.state(t - 1, a.owner).id}, {"q", a.reward}, {"p", std::move(p)}});
    }
    actions.push_back(std::move(acts));
  }
  doc["states"] = std::move(states);
  doc["actions"] = std::move(actions);
  doc["crash"] = std::move(crash);
  if (include_initial) {
    Json mu = Json::object();
    const auto& init = model.initial();
    for (StateIndex x = 0; x < init.size(); ++x)
      if (init[x] != 0.0) mu[model.state(model.first(), x).id] = init[x];
    doc["mu"] = std::move(mu);
  }
  if (model.allow_zero_kill()) doc["allowZeroKill"] = true;
  return doc;
}

}  // namespace kmdp
