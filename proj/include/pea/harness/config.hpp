#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "../losses.hpp"

namespace pea {

struct ConfigError : Error {
  using Error::Error;
};

struct ExpertSpec {
  std::string type = "constant";  // constant | iid-random | trailing-average | second-guess-contrarian |
                                  // second-guess-identity | second-guess-flip | callback
  Decision decision;              // constant
  std::size_t window = 0;         // trailing-average; 0 = whole history
  std::string callback;           // callback-by-name
  std::string label;
};

struct EvaluatorSpec {
  std::string game;
  double c = 1.0;
  double eta = 1.0;
};

struct RealitySpec {
  std::string type = "iid";  // iid | adversarial | sequence | dirichlet
  std::vector<double> probs;
  std::vector<std::size_t> outcomes;
  double alpha = 1.0;
};

struct SolverSpec {
  double epsilon = 1e-6;
  double tol = 1e-12;
  std::string selection = "fixed-point";  // fixed-point | midpoint
  bool record_violations = false;
  double fixed_point_tol = 1e-12;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string game = "log";
  std::size_t m = 2;
  std::string algorithm = "aa";  // aa | dfa | sg-dfa | sg-aa | ml-dfa | simplex-dfa
  double c = 1.0;
  double eta = 1.0;
  std::vector<double> prior;  // empty = uniform
  std::vector<ExpertSpec> experts;
  std::vector<EvaluatorSpec> evaluators;  // ml-dfa
  RealitySpec reality;
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  SolverSpec solver;
  std::string expect = "pass";  // pass | fail
  double expect_regret_at_least = 0;  // fraction of N, for expected failures
  std::string out_dir;
  std::string trajectory_file = "trajectory.jsonl";
  std::string summary_file = "summary.csv";
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline Decision decision_from_json(const nlohmann::json& e, const Game& game) {
  if (e.contains("p")) {
    double p = e["p"].get<double>();
    if (!(p >= 0 && p <= 1)) throw ConfigError("expert p must lie in [0, 1]");
    if (game.m() != 2) throw ConfigError("'p' shorthand needs a binary game");
    if (game.domain == DomainKind::simplex) return {1 - p, p};
    return {p};
  }
  if (e.contains("decision")) {
    Decision d = e["decision"].get<std::vector<double>>();
    if (d.size() != game.decision_size()) throw ConfigError("expert decision has the wrong length");
    if (game.domain == DomainKind::simplex) {
      try {
        (void)Distribution(d);
      } catch (const Error&) {
        throw ConfigError("simplex decision must be a probability vector");
      }
    }
    return d;
  }
  throw ConfigError("constant expert needs 'p' or 'decision'");
}

}  // namespace detail

inline ScenarioConfig parse_config(const nlohmann::json& j) {
  using detail::get_or;
  ScenarioConfig c;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  c.name = get_or<std::string>(j, "name", c.name);
  if (!j.contains("game")) throw ConfigError("missing 'game'");
  const auto& g = j["game"];
  if (g.is_string()) {
    c.game = g.get<std::string>();
  } else {
    c.game = get_or<std::string>(g, "name", c.game);
    c.m = get_or<std::size_t>(g, "m", c.m);
  }
  Game game;
  try {
    game = builtin_game(c.game, c.m);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  c.algorithm = get_or<std::string>(j, "algorithm", c.algorithm);
  static const std::vector<std::string> algos{"aa", "dfa", "sg-dfa", "sg-aa", "ml-dfa", "simplex-dfa"};
  if (std::find(algos.begin(), algos.end(), c.algorithm) == algos.end())
    throw ConfigError("unknown algorithm " + c.algorithm);

  c.eta = get_or<double>(j, "eta", c.eta);
  if (!(c.eta > 0)) throw ConfigError("eta must be positive");
  if (j.contains("c") && j["c"].is_string()) {
    if (j["c"] != "realizability") throw ConfigError("'c' must be a number or \"realizability\"");
    try {
      c.c = realizability_constant(parse_game_name(c.game), c.eta);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  } else {
    c.c = get_or<double>(j, "c", c.c);
  }
  if (!(c.c >= 1)) throw ConfigError("c must be >= 1");

  if (!j.contains("experts") || !j["experts"].is_array() || j["experts"].empty())
    throw ConfigError("'experts' must be a non-empty list");
  for (const auto& e : j["experts"]) {
    ExpertSpec s;
    s.type = get_or<std::string>(e, "type", s.type);
    s.label = get_or<std::string>(e, "label", "");
    if (s.type == "constant") {
      s.decision = detail::decision_from_json(e, game);
    } else if (s.type == "trailing-average") {
      s.window = get_or<std::size_t>(e, "window", 0);
    } else if (s.type == "callback") {
      s.callback = get_or<std::string>(e, "name", "");
      if (s.callback.empty()) throw ConfigError("callback expert needs 'name'");
    } else if (s.type != "iid-random" && s.type != "second-guess-contrarian" && s.type != "second-guess-identity" &&
               s.type != "second-guess-flip") {
      throw ConfigError("unknown expert type " + s.type);
    }
    bool sg = s.type.rfind("second-guess", 0) == 0;
    if (sg && c.algorithm != "sg-dfa" && c.algorithm != "sg-aa")
      throw ConfigError("second-guessing experts need algorithm sg-dfa or sg-aa");
    c.experts.push_back(s);
  }

  if (c.algorithm == "ml-dfa") {
    if (!j.contains("evaluators") || !j["evaluators"].is_array() || j["evaluators"].empty())
      throw ConfigError("ml-dfa needs a non-empty 'evaluators' list");
    for (const auto& e : j["evaluators"]) {
      EvaluatorSpec s;
      s.game = get_or<std::string>(e, "game", "");
      s.c = get_or<double>(e, "c", 1.0);
      s.eta = get_or<double>(e, "eta", 1.0);
      try {
        (void)builtin_game(s.game, c.m);
      } catch (const Error& err) {
        throw ConfigError(std::string("evaluator: ") + err.what());
      }
      c.evaluators.push_back(s);
    }
  }
  if (c.algorithm == "simplex-dfa" && c.game != "brier" && c.game != "kl" && c.game != "absolute")
    throw ConfigError("simplex-dfa supports brier, kl and absolute");

  const std::size_t parties =
      c.algorithm == "ml-dfa" ? c.experts.size() * c.evaluators.size() : c.experts.size();
  if (j.contains("prior") && j["prior"].is_array()) {
    c.prior = j["prior"].get<std::vector<double>>();
    if (c.prior.size() != parties) throw ConfigError("prior length differs from the number of experts");
    try {
      (void)Distribution(c.prior);
    } catch (const Error&) {
      throw ConfigError("prior must be a probability vector");
    }
  } else if (j.contains("prior") && j["prior"] != "uniform") {
    throw ConfigError("'prior' must be a list or \"uniform\"");
  }

  if (j.contains("reality")) {
    const auto& r = j["reality"];
    c.reality.type = get_or<std::string>(r, "type", c.reality.type);
    c.reality.probs = get_or<std::vector<double>>(r, "probs", {});
    c.reality.outcomes = get_or<std::vector<std::size_t>>(r, "outcomes", {});
    c.reality.alpha = get_or<double>(r, "alpha", 1.0);
  }
  const auto& rt = c.reality.type;
  if (rt == "iid") {
    if (c.reality.probs.empty()) c.reality.probs = Distribution::uniform(c.m).probs();
    if (c.reality.probs.size() != c.m) throw ConfigError("reality probs length differs from m");
    try {
      (void)Distribution(c.reality.probs);
    } catch (const Error&) {
      throw ConfigError("reality probs must be a probability vector");
    }
  } else if (rt == "sequence") {
    if (c.reality.outcomes.empty()) throw ConfigError("sequence reality needs 'outcomes'");
    for (auto o : c.reality.outcomes)
      if (o >= c.m) throw ConfigError("sequence outcome out of range");
  } else if (rt == "dirichlet") {
    if (c.algorithm != "simplex-dfa") throw ConfigError("dirichlet reality needs simplex-dfa");
    if (!(c.reality.alpha > 0)) throw ConfigError("dirichlet alpha must be positive");
  } else if (rt != "adversarial") {
    throw ConfigError("unknown reality type " + rt);
  }

  c.horizon = get_or<std::size_t>(j, "horizon", c.horizon);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    c.solver.epsilon = get_or<double>(s, "epsilon", c.solver.epsilon);
    c.solver.tol = get_or<double>(s, "tol", c.solver.tol);
    c.solver.selection = get_or<std::string>(s, "selection", c.solver.selection);
    c.solver.record_violations = get_or<bool>(s, "record_violations", c.solver.record_violations);
    c.solver.fixed_point_tol = get_or<double>(s, "fixed_point_tol", c.solver.fixed_point_tol);
    if (c.solver.selection != "fixed-point" && c.solver.selection != "midpoint")
      throw ConfigError("solver.selection must be fixed-point or midpoint");
  }
  if (j.contains("expect")) {
    const auto& e = j["expect"];
    if (e.is_string()) {
      c.expect = e.get<std::string>();
    } else {
      c.expect = get_or<std::string>(e, "outcome", "pass");
      c.expect_regret_at_least = get_or<double>(e, "regret_per_step_at_least", 0.0);
    }
    if (c.expect != "pass" && c.expect != "fail") throw ConfigError("expect must be pass or fail");
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    c.out_dir = get_or<std::string>(o, "dir", c.out_dir);
    c.trajectory_file = get_or<std::string>(o, "trajectory", c.trajectory_file);
    c.summary_file = get_or<std::string>(o, "summary", c.summary_file);
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace pea
