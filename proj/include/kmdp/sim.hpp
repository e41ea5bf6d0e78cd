#pragma once

// Monte Carlo estimation of policy assessments.

#include <cmath>
#include <cstdint>
#include <vector>

#include "kmdp/core.hpp"
#include "kmdp/measure.hpp"
#include "kmdp/policy.hpp"
#include "kmdp/random.hpp"

namespace kmdp {

struct SimulationResult {
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double standard_error = 0.0;
  /// Fraction of trajectories killed at stage first+1+i.
  std::vector<double> kill_rate;
};

/// One outcome: x ~ initial, then a_t ~ pi(.|h) and x_t ~ p(.|a_t) until
/// the horizon or the kill atom.
inline Outcome sample_outcome(const KilledModel& model, const std::vector<double>& initial, const GeneralPolicy& pi,
                              CounterStream& stream) {
  History h{model.first(), {sample_index(initial, stream.uniform())}, {}};
  bool killed = model.is_killed(h.first, h.current());
  std::vector<double> weights;
  while (!killed && h.stage() < model.last()) {
    const Stage t = h.stage() + 1;
    const auto rule = pi(h);
    weights.clear();
    for (const auto& w : rule) weights.push_back(w.probability);
    const ActionIndex a = rule.at(sample_index(weights, stream.uniform())).action;
    const auto& act = model.action(t, a);
    if (act.owner != h.current()) throw InconsistentOutcomeError("policy chose an unavailable action");
    const StateIndex y = sample_index(act.transition, stream.uniform());
    h.actions.push_back(a);
    h.states.push_back(y);
    killed = model.is_killed(t, y);
  }
  return {h.first, std::move(h.states), std::move(h.actions), killed};
}

/// Averages `samples` independent outcome assessments. Trajectory i draws
/// from substream i of `seed`; statistics are accumulated in index order.
inline SimulationResult estimate_value(const KilledModel& model, const std::vector<double>& initial,
                                       const GeneralPolicy& pi, std::uint64_t samples, std::uint64_t seed) {
  if (samples < 2) throw Error("estimate_value needs at least two samples");
  SimulationResult r;
  r.samples = samples;
  r.seed = seed;
  std::vector<std::uint64_t> kills(static_cast<std::size_t>(model.epochs()), 0);
  double sum = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  const CounterStream root(seed, 0);
  for (std::uint64_t i = 0; i < samples; ++i) {
    CounterStream stream = root.split(i);
    const Outcome o = sample_outcome(model, initial, pi, stream);
    if (o.killed && o.kill_stage() > model.first()) ++kills[static_cast<std::size_t>(o.kill_stage() - model.first() - 1)];
    const double value = assess_outcome(model, o);
    sum += value;
    const double delta = value - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (value - mean);
  }
  r.mean = sum / static_cast<double>(samples);
  r.stddev = std::sqrt(m2 / static_cast<double>(samples - 1));
  r.standard_error = r.stddev / std::sqrt(static_cast<double>(samples));
  for (auto k : kills) r.kill_rate.push_back(static_cast<double>(k) / static_cast<double>(samples));
  return r;
}

}  // namespace kmdp
