#pragma once

// Command-line front end. Exit codes:
//   0  success / valid / all checks passed
//   1  validation failure, policy mismatch, failing check, horizon error
//   2  malformed model file (syntax or schema) or bad usage
//   3  unknown check name

#include <openssl/evp.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kmdp/kmdp.hpp"

namespace kmdp::cli {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

inline std::uint64_t outcome_cap() {
  if (const char* env = std::getenv("KMDP_MAX_OUTCOMES")) {
    std::uint64_t v = 0;
    const std::string s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) return v;
  }
  return kDefaultOutcomeCap;
}

struct Input {
  std::string path;
  std::string digest;
  ModelSpec spec;
};

inline Input read_model(const std::string& path) {
  const std::string text = read_file(path);
  return {path, sha256_hex(text), parse_model_text(text)};
}

inline Json provenance(const std::vector<std::pair<std::string, std::string>>& files) {
  Json inputs = Json::object();
  for (const auto& [role, path] : files) {
    if (path.empty()) continue;
    inputs[role] = {{"path", path}, {"sha256", sha256_hex(read_file(path))}};
  }
  return {{"tool", "kmdp"}, {"version", kVersion}, {"inputs", std::move(inputs)}};
}

inline void emit(const Json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    f << text;
  }
}

/// Initial distribution: the model's mu, or a point mass on --start.
inline std::vector<double> start_distribution(const KilledModel& model, const std::string& start) {
  if (start.empty()) return model.initial();
  auto x = model.find_state(model.first(), start);
  if (!x) throw PolicyError("unknown start state '" + start + "'");
  return point_mass(model, *x);
}

/// Parses repeated --chi values: "t=value" for one stage, or a bare value for every stage.
inline std::vector<double> parse_chi(const KilledModel& model, const std::vector<std::string>& flags) {
  std::vector<double> chi(static_cast<std::size_t>(model.epochs()), 0.0);
  for (const auto& f : flags) {
    const auto eq = f.find('=');
    try {
      if (eq == std::string::npos) {
        const double v = std::stod(f);
        std::fill(chi.begin(), chi.end(), v);
      } else {
        const int t = std::stoi(f.substr(0, eq));
        if (t <= model.first() || t > model.last()) throw Error("slack stage out of range: " + f);
        chi[static_cast<std::size_t>(t - model.first() - 1)] = std::stod(f.substr(eq + 1));
      }
    } catch (const std::invalid_argument&) {
      throw Error("malformed slack '" + f + "'");
    }
  }
  for (double c : chi)
    if (!(c >= 0.0)) throw Error("slacks must be nonnegative");
  return chi;
}

inline std::string path_text(const KilledModel& model, const Outcome& o) {
  std::string s;
  for (std::size_t i = 0; i < o.states.size(); ++i) {
    const Stage t = o.first + static_cast<Stage>(i);
    if (i > 0) s += " " + model.action(t, o.actions[i - 1]).id + " ";
    s += model.state(t, o.states[i]).id;
  }
  return s;
}

// ---------------------------------------------------------------------------

inline int cmd_validate(const std::string& model_path, std::ostream& out, std::ostream& err) {
  ModelSpec spec;
  try {
    spec = read_model(model_path).spec;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const auto violations = validate_spec(spec);
  for (const auto& v : violations) out << v.to_string() << "\n";
  if (violations.empty()) out << "valid\n";
  return violations.empty() ? 0 : 1;
}

inline Json solve_report(const KilledModel& model, const std::vector<double>& chi) {
  const auto solved = backward_induction(model);
  const auto extracted = extract_simple_policy(model, solved, chi);
  Json values = Json::object();
  for (const auto& v : solved.values) {
    Json stage = Json::object();
    for (StateIndex x = 0; x < v.values.size(); ++x)
      if (!model.is_killed(v.stage, x)) stage[model.state(v.stage, x).id] = v.values[x];
    values[std::to_string(v.stage)] = std::move(stage);
  }
  Json assessments = Json::object();
  Json slacks = Json::object();
  for (const auto& u : solved.assessments) {
    Json stage = Json::object();
    for (ActionIndex a = 0; a < u.values.size(); ++a) stage[model.action(u.stage, a).id] = u.values[a];
    assessments[std::to_string(u.stage)] = std::move(stage);
    slacks[std::to_string(u.stage)] = chi[static_cast<std::size_t>(u.stage - model.first() - 1)];
  }
  return {{"values", std::move(values)},
          {"assessments", std::move(assessments)},
          {"policy", policy_to_json(model, extracted.policy)},
          {"chi", std::move(slacks)},
          {"epsilon", extracted.epsilon},
          {"processValue", process_value(model, solved.initial_value(), model.initial())}};
}

inline int cmd_solve(const std::string& model_path, const std::vector<std::string>& chi_flags,
                     const std::string& out_path, const std::string& policy_out, std::ostream& out, std::ostream& err) {
  Input input;
  try {
    input = read_model(model_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto model = build_model(input.spec);
    const auto chi = parse_chi(model, chi_flags);
    Json report = provenance({{"model", model_path}});
    report.update(solve_report(model, chi));
    emit(report, out_path, out);
    if (!policy_out.empty()) emit(report["policy"], policy_out, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_eval(const std::string& model_path, const std::string& policy_path, const std::string& start,
                    bool per_state, std::ostream& out, std::ostream& err) {
  Input input;
  try {
    input = read_model(model_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto model = build_model(input.spec);
    const auto pi = as_general(load_policy(model, policy_path));
    const auto cap = outcome_cap();
    if (per_state) {
      const auto& xs = model.states(model.first());
      for (StateIndex x = 0; x < xs.size(); ++x)
        out << xs[x].id << "\t" << format_double(assess_policy(model, x, pi, cap)) << "\n";
    } else {
      out << format_double(assess_policy(model, start_distribution(model, start), pi, cap)) << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_enumerate(const std::string& model_path, const std::string& policy_path, const std::string& start,
                         const std::string& format, const std::string& out_path, std::ostream& out,
                         std::ostream& err) {
  Input input;
  try {
    input = read_model(model_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto model = build_model(input.spec);
    const auto pi = as_general(load_policy(model, policy_path));
    const auto law = enumerate_outcomes(model, start_distribution(model, start), pi, outcome_cap());
    std::ostringstream os;
    if (format == "csv") {
      os << "outcome-kind,path,kill-stage,mass,assessment\n";
      for (const auto& w : law) {
        os << (w.outcome.killed ? "killed" : "survived") << "," << path_text(model, w.outcome) << ","
           << (w.outcome.killed ? std::to_string(w.outcome.kill_stage()) : std::string()) << ","
           << format_double(w.mass) << "," << format_double(assess_outcome(model, w.outcome)) << "\n";
      }
    } else {
      Json doc = provenance({{"model", model_path}, {"policy", policy_path}});
      Json rows = Json::array();
      for (const auto& w : law) {
        Json row = {{"kind", w.outcome.killed ? "killed" : "survived"},
                    {"path", path_text(model, w.outcome)},
                    {"mass", w.mass},
                    {"assessment", assess_outcome(model, w.outcome)}};
        if (w.outcome.killed) row["killStage"] = w.outcome.kill_stage();
        rows.push_back(std::move(row));
      }
      doc["outcomes"] = std::move(rows);
      os << doc.dump(2) << "\n";
    }
    if (out_path.empty()) {
      out << os.str();
    } else {
      std::ofstream(out_path, std::ios::binary) << os.str();
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_simulate(const std::string& model_path, const std::string& policy_path, const std::string& start,
                        std::uint64_t samples, std::uint64_t seed, const std::string& out_path, std::ostream& out,
                        std::ostream& err) {
  Input input;
  try {
    input = read_model(model_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto model = build_model(input.spec);
    const auto pi = as_general(load_policy(model, policy_path));
    const auto r = estimate_value(model, start_distribution(model, start), pi, samples, seed);
    Json doc = provenance({{"model", model_path}, {"policy", policy_path}});
    Json kill = Json::object();
    for (std::size_t i = 0; i < r.kill_rate.size(); ++i)
      kill[std::to_string(model.first() + static_cast<Stage>(i) + 1)] = r.kill_rate[i];
    doc.update(Json{{"samples", r.samples},
                    {"seed", r.seed},
                    {"mean", r.mean},
                    {"stddev", r.stddev},
                    {"standardError", r.standard_error},
                    {"killRate", std::move(kill)}});
    emit(doc, out_path, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

struct CheckOptions {
  std::string name;
  std::uint64_t seed = 1;
  std::uint64_t count = 50;
  RandomModelConfig config;
  double tolerance = kValueTolerance;
  std::string out_path;
  std::string counterexample_path;
  std::string replay_path;
};

inline int cmd_check(const CheckOptions& o, std::ostream& out, std::ostream& err) {
  try {
    CheckReport report;
    Json doc = provenance({{"counterexample", o.replay_path}});
    if (!o.replay_path.empty()) {
      const Json cx = Json::parse(read_file(o.replay_path));
      report = replay_counterexample(cx, o.tolerance);
    } else {
      report = run_check(o.name, o.seed, o.count, o.config, o.tolerance);
      doc["seed"] = o.seed;
    }
    doc.update(report_to_json(report));
    emit(doc, o.out_path, out);
    if (!report.passed && report.counterexample && !o.counterexample_path.empty())
      emit(*report.counterexample, o.counterexample_path, out);
    return report.passed ? 0 : 1;
  } catch (const UnknownCheckError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

inline int cmd_derive(const std::string& model_path, const std::string& out_path, std::ostream& out,
                      std::ostream& err) {
  Input input;
  try {
    input = read_model(model_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto model = build_model(input.spec);
    emit(model_to_json(derived_model(model), false), out_path, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Finite-horizon killed Markov decision processes", "kmdp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string model_path, policy_path, start, out_path, policy_out, format = "csv";
  std::vector<std::string> chi;
  bool per_state = false;
  std::uint64_t samples = 100000, seed = 1;
  CheckOptions check;

  auto* validate = app.add_subcommand("validate", "Check a model file against every invariant");
  validate->add_option("model", model_path, "Model JSON file")->required();

  auto* solve = app.add_subcommand("solve", "Backward induction and simple-policy extraction");
  solve->add_option("model", model_path, "Model JSON file")->required();
  solve->add_option("--chi", chi, "Slack per stage as t=value, or one value for every stage");
  solve->add_option("-o,--out", out_path, "Write the report here instead of stdout");
  solve->add_option("--policy-out", policy_out, "Also write the extracted policy document");

  auto* eval = app.add_subcommand("eval", "Exact assessment of a policy");
  eval->add_option("model", model_path, "Model JSON file")->required();
  eval->add_option("-p,--policy", policy_path, "Policy JSON file")->required();
  eval->add_option("--start", start, "Start from this state instead of the model's mu");
  eval->add_flag("--per-state", per_state, "Print omega(x, pi) for every initial state");

  auto* enumerate = app.add_subcommand("enumerate", "Dump the outcome law");
  enumerate->add_option("model", model_path, "Model JSON file")->required();
  enumerate->add_option("-p,--policy", policy_path, "Policy JSON file")->required();
  enumerate->add_option("--start", start, "Start from this state instead of the model's mu");
  enumerate->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  enumerate->add_option("-o,--out", out_path, "Output file");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of a policy's assessment");
  simulate->add_option("model", model_path, "Model JSON file")->required();
  simulate->add_option("-p,--policy", policy_path, "Policy JSON file")->required();
  simulate->add_option("--start", start, "Start from this state instead of the model's mu");
  simulate->add_option("-n,--samples", samples, "Number of trajectories")->check(CLI::Range(2ULL, 1ULL << 40));
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("-o,--out", out_path, "Output file");

  auto* chk = app.add_subcommand("check", "Run a verification check on seeded random models");
  chk->add_option("name", check.name, "oracle | fundamental | extraction | sufficiency | markov | dp | uniform");
  chk->add_option("--seed", check.seed, "Base seed");
  chk->add_option("--count", check.count, "Number of random instances");
  chk->add_option("--min-epochs", check.config.min_epochs)->check(CLI::Range(1, 64));
  chk->add_option("--max-epochs", check.config.max_epochs)->check(CLI::Range(1, 64));
  chk->add_option("--max-states", check.config.max_states)->check(CLI::Range(2, 64));
  chk->add_option("--max-actions", check.config.max_actions)->check(CLI::Range(1, 64));
  chk->add_option("--tolerance", check.tolerance, "Pass threshold on the discrepancy");
  chk->add_option("-o,--out", check.out_path, "Write the report here instead of stdout");
  chk->add_option("--counterexample-out", check.counterexample_path, "Write the worst failing instance here");
  chk->add_option("--replay", check.replay_path, "Re-run a dumped counterexample");

  auto* derive = app.add_subcommand("derive", "Emit the derived model (first stage removed)");
  derive->add_option("model", model_path, "Model JSON file")->required();
  derive->add_option("-o,--out", out_path, "Output file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  if (*validate) return cmd_validate(model_path, out, err);
  if (*solve) return cmd_solve(model_path, chi, out_path, policy_out, out, err);
  if (*eval) return cmd_eval(model_path, policy_path, start, per_state, out, err);
  if (*enumerate) return cmd_enumerate(model_path, policy_path, start, format, out_path, out, err);
  if (*simulate) return cmd_simulate(model_path, policy_path, start, samples, seed, out_path, out, err);
  if (*chk) {
    if (check.replay_path.empty() && check.name.empty()) {
      err << "error: check needs a name or --replay\n";
      return 2;
    }
    if (check.config.max_epochs < check.config.min_epochs) check.config.max_epochs = check.config.min_epochs;
    return cmd_check(check, out, err);
  }
  return cmd_derive(model_path, out_path, out, err);
}

}  // namespace kmdp::cli
