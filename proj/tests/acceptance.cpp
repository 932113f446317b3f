// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pea/harness/oracle.hpp"
#include "pea/pea.hpp"

using namespace pea;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s AC%d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ScenarioConfig scenario(const std::string& name) {
  return load_config(std::string(PEA_SCENARIO_DIR) + "/" + name + ".json");
}

// L_n <= c L_n^theta + (c/eta)(ln 1/P0 + slack_n) at every prefix, recomputed from the records
double worst_prefix_margin(const RunResult& r, bool with_slack) {
  double worst = -kInf;
  for (const auto& rec : r.records)
    for (std::size_t t = 0; t < r.summary.constants.size(); ++t) {
      const auto& k = r.summary.constants[t];
      double L = rec.learner_cumulative[rec.learner_cumulative.size() == 1 ? 0 : t];
      double E = rec.expert_cumulative[t];
      if (std::isinf(E)) continue;
      double slack = with_slack ? rec.cumulative_log_slack : 0.0;
      worst = std::max(worst, L - k.c * E - (k.c / k.eta) * (std::log(1 / k.prior) + slack));
    }
  return worst;
}

void ac1() {
  auto cfg = scenario("log_aa_k10");
  auto t0 = std::chrono::steady_clock::now();
  auto r = run_scenario(cfg);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool shape = cfg.experts.size() == 10 && r.records.size() == 10000 && cfg.algorithm == "aa";
  bool ln10 = true;
  for (const auto& k : r.summary.constants) ln10 = ln10 && std::abs((k.c / k.eta) * std::log(1 / k.prior) - std::log(10.0)) < 1e-12;
  double m = worst_prefix_margin(r, false);
  report(1, shape && ln10 && m <= 1e-7 && r.summary.error.empty() && secs < 5.0,
         fmt("AA log K=10 N=10000 worst margin %.3g, runtime %.2f s", m, secs));
}

void ac2() {
  auto cfg = scenario("log_dfa_k10");
  auto r = run_scenario(cfg);
  bool shape = cfg.experts.size() == 10 && r.records.size() == 10000 && cfg.algorithm == "dfa";
  double m = worst_prefix_margin(r, true);
  // Q^{P0} may rise by at most the step's slack, relative tolerance 1e-9
  double worst_rise = -kInf;
  double prev = 0, prev_slack = 0;
  for (const auto& rec : r.records) {
    double allowed = rec.cumulative_log_slack - prev_slack;
    worst_rise = std::max(worst_rise, rec.log_value - prev - allowed);
    prev = rec.log_value;
    prev_slack = rec.cumulative_log_slack;
  }
  double slack = r.summary.cumulative_log_slack;
  report(2, shape && m <= 1e-7 && worst_rise <= std::log1p(1e-9) && slack < 1e-4 && r.summary.error.empty(),
         fmt("DFA log K=10 worst margin %.3g, worst log Q rise %.3g, slack %.3g", m, worst_rise, slack));
}

void ac3() {
  double worst = 0;
  bool ok = true;
  for (const char* game : {"log", "square"}) {
    auto j = nlohmann::json::parse(R"({
      "name": "eq", "game": {"name": "log", "m": 2}, "algorithm": "aa",
      "experts": [{"type": "iid-random"}, {"type": "iid-random"}, {"type": "iid-random"},
                  {"type": "trailing-average", "window": 5}, {"type": "constant", "p": 0.3}],
      "reality": {"type": "iid", "probs": [0.45, 0.55]}, "horizon": 200, "seed": 99,
      "solver": {"selection": "midpoint"}
    })");
    j["game"]["name"] = game;
    j["eta"] = std::string(game) == "log" ? 1.0 : 2.0;
    auto a = run_scenario(parse_config(j));
    j["algorithm"] = "dfa";
    auto d = run_scenario(parse_config(j));
    ok = ok && a.records.size() == 200 && d.records.size() == 200;
    for (std::size_t n = 0; ok && n < 200; ++n)
      worst = std::max(worst, std::abs(a.records[n].decision.back() - d.records[n].decision.back()));
  }
  report(3, ok && worst <= 1e-6, fmt("log and square, 200 steps, max |p_AA - p_DFA| = %.3g", worst));
}

void ac4() {
  Game lg = builtin_game("log", 2), sq = builtin_game("square", 2);
  double pos = -kInf;
  for (double eta : {0.25, 0.5, 1.0})
    pos = std::max(pos, supermartingale_property_check(canonical_proper_loss(lg, eta), 1.0, eta, lg, 10000).max_excess);
  for (double eta : {0.5, 1.0, 2.0})
    pos = std::max(pos, supermartingale_property_check(canonical_proper_loss(sq, eta), 1.0, eta, sq, 10000).max_excess);
  double neg_log = supermartingale_property_check(canonical_proper_loss(lg, 1.3), 1.0, 1.3, lg, 10000).max_excess;
  double neg_sq = supermartingale_property_check(canonical_proper_loss(sq, 2.5), 1.0, 2.5, sq, 10000).max_excess;
  report(4, pos <= 1e-9 && neg_log > 1e-4 && neg_sq > 1e-4,
         fmt("max excess %.3g; controls log 1.3 -> %.3g, square 2.5 -> %.3g", pos, neg_log, neg_sq));
}

void ac5() {
  double worst = 0;
  bool strict = true;
  for (const auto& l : {canonical_proper_loss(builtin_game("log", 2), 1.0),
                        canonical_proper_loss(builtin_game("brier", 2), 1.0),
                        proper_loss_from_entropy(builtin_game("hellinger", 2), 1.0)}) {
    auto r = check_proper(l, 50);
    worst = std::max(worst, r.max_violation);
    strict = strict && r.strictness;
  }
  auto raw = check_proper(raw_hellinger_loss(2), 50);
  bool witnessed = raw.max_violation > 1e-9 && raw.witness_pi.size() == 2;
  bool nonext = false;
  try {
    proper_loss_from_entropy(log_with_dummy_game(), 1.0);
  } catch (const NonExtendable&) {
    nonext = true;
  }
  report(5, worst <= 1e-9 && strict && witnessed && nonext,
         fmt("proper max violation %.3g, raw Hellinger violation %.3g, NonExtendable ", worst, raw.max_violation) +
             (nonext ? "raised" : "missing"));
}

void ac6() {
  Rng rng(606);
  double savage = 0, entropy = 0;
  for (const char* name : {"brier", "log"}) {
    for (std::size_t m : {2u, 3u}) {
      Game g = builtin_game(name, m);
      ProperLoss derived = proper_loss_from_entropy(g, 1.0);
      for (int i = 0; i < 100; ++i) {
        std::vector<double> p;
        do p = rng.dirichlet(m);
        while (*std::min_element(p.begin(), p.end()) < 0.02);
        Distribution pi(p);
        auto H = generalized_entropy(g, pi, 1.0);
        LossVector direct = g.prediction(H.argmin), fd = derived(pi);
        for (std::size_t w = 0; w < m; ++w) savage = std::max(savage, std::abs(fd[w] - direct[w]));
        double closed = std::string(name) == "brier" ? 1.0 : 0.0;
        for (double x : p) closed += std::string(name) == "brier" ? -x * x : -x * std::log(x);
        entropy = std::max(entropy, std::abs(H.value - closed));
      }
    }
  }
  report(6, savage <= 1e-5 && entropy <= 1e-9,
         fmt("Savage vs argmin %.3g, entropy vs closed form %.3g", savage, entropy));
}

void ac7() {
  auto a = run_scenario(scenario("absolute_aa_realizable"));
  auto d = run_scenario(scenario("absolute_dfa_realizable"));
  const double c = realizability_constant(GameName::absolute, 1.0);
  bool pos = a.summary.audits_ok && d.summary.audits_ok && a.records.size() == 1000 && d.records.size() == 1000 &&
             worst_prefix_margin(a, false) <= 1e-7 && worst_prefix_margin(d, true) <= 1e-7;
  // c = 1: the realizability machinery refuses
  Game ab = builtin_game("absolute", 2);
  std::vector<LossVector> adv{ab.prediction({0.0}), ab.prediction({1.0})};
  bool aa_fires = false, dfa_fires = false;
  try {
    aa_predict(aa_init(ab, 1.0, 1.0, Distribution::uniform(2)), adv);
  } catch (const SubstitutionFailure&) {
    aa_fires = true;
  }
  try {
    dfa_predict(dfa_init(default_proper_loss(ab, c, 1.0), 1.0, 1.0, Distribution::uniform(2)), adv);
  } catch (const ContractViolation&) {
    dfa_fires = true;
  }
  auto cfg = scenario("absolute_aa_realizable");
  cfg.c = 1.0;
  bool run_stops = !run_scenario(cfg).summary.error.empty();
  cfg = scenario("absolute_dfa_realizable");
  cfg.c = 1.0;
  run_stops = run_stops && !run_scenario(cfg).summary.error.empty();
  report(7, pos && aa_fires && dfa_fires && run_stops,
         fmt("c = %.6f: AA and DFA bounds over 1000 adversarial steps; c = 1 control ", c) +
             (aa_fires && dfa_fires && run_stops ? "fires" : "silent"));
}

void ac8() {
  auto good = run_scenario(scenario("sg_dfa_contrarian"));
  double m = worst_prefix_margin(good, true);
  auto bad = run_scenario(scenario("sg_flip_simple"));
  report(8, good.summary.audits_ok && good.records.size() == 300 && m <= 1e-7 && !bad.summary.audits_ok &&
                bad.summary.regret_per_step >= 0.4,
         fmt("contrarian worst margin %.3g; flip regret/N = %.3f, audits ", m, bad.summary.regret_per_step) +
             (bad.summary.audits_ok ? "pass" : "fail as expected"));
}

void ac9() {
  auto a = run_scenario(scenario("sg_aa_contrarian"));
  auto d = run_scenario(scenario("sg_dfa_contrarian"));
  double m = worst_prefix_margin(a, false);
  double gap = 0;
  bool same = a.records.size() == d.records.size() && !a.records.empty();
  for (std::size_t n = 0; same && n < a.records.size(); ++n)
    gap = std::max(gap, std::abs(a.records[n].decision.back() - d.records[n].decision.back()));
  report(9, same && a.summary.audits_ok && a.summary.max_fixed_point_residual <= 1e-8 && m <= 1e-7 && gap <= 1e-4,
         fmt("residual %.3g, worst margin %.3g, max |p_sgAA - p_sgDFA| = %.3g", a.summary.max_fixed_point_residual, m,
             gap));
}

void ac10() {
  auto cfg = scenario("ml_dfa_log_square");
  auto r = run_scenario(cfg);
  const auto& last = r.records.back();
  const double ln8 = std::log(8.0), slack = last.cumulative_log_slack;
  bool ok = r.records.size() == 2000 && r.summary.constants.size() == 8 && cfg.experts.size() == 4;
  double worst_log = -kInf, worst_sq = -kInf;
  for (const auto& rec : r.records)
    for (std::size_t t = 0; t < 8; ++t) {
      double regret = rec.learner_cumulative[t] - rec.expert_cumulative[t];
      if (t < 4)
        worst_log = std::max(worst_log, regret - (ln8 + rec.cumulative_log_slack));
      else
        worst_sq = std::max(worst_sq, regret - 0.5 * (ln8 + rec.cumulative_log_slack));
    }
  for (std::size_t t = 0; t < 8; ++t) ok = ok && std::abs(r.summary.constants[t].prior - 0.125) < 1e-15;
  report(10, ok && worst_log <= 1e-7 && worst_sq <= 1e-7,
         fmt("log evaluators margin %.3g, square evaluators margin %.3g, slack %.3g", worst_log, worst_sq, slack));
}

void ac11() {
  auto b = run_scenario(scenario("simplex_brier"));
  auto k = run_scenario(scenario("simplex_kl"));
  bool bounds = b.summary.audits_ok && k.summary.audits_ok && b.records.size() == 500 && k.records.size() == 500 &&
                worst_prefix_margin(b, true) <= 1e-7 && worst_prefix_margin(k, true) <= 1e-7;
  double conv = -kInf;
  for (const char* name : {"brier", "kl"})
    conv = std::max(conv, check_relative_exp_convexity(simplex_game(name, 3), 1.0, 1.0, 10000).worst_violation);
  auto w = relative_exp_convexity_terms(simplex_game("absolute", 2), 1.0, 1.0, {0.0}, {0.5}, Distribution::binary(0.5));
  bool witness = std::abs(w.lhs - std::exp(0.5)) < 1e-12 && std::abs(w.rhs - std::cosh(0.5)) < 1e-12 && w.rhs < w.lhs;
  report(11, bounds && conv <= 1e-9 && witness,
         std::string("Brier/KL bounds ") + (bounds ? "hold" : "fail") +
             fmt(", exp-convexity worst %.3g, absolute witness %.4f > %.4f", conv, w.lhs, w.rhs));
}

// Rebuilds the weights of every DFA-type scenario from its records and compares
// the recorded solution with the grid optimum of the same q.
struct OracleStats {
  std::size_t steps = 0, mismatches = 0;
  double worst_value_gap = -kInf;  // solver max_w q minus grid optimum, on minimizing steps
  double worst_admissible = -kInf; // solver max_w q minus max(1, grid optimum)
};

OracleStats oracle_replay(const ScenarioConfig& cfg, std::size_t limit) {
  OracleStats st;
  auto r = run_scenario(cfg);
  const Game game = builtin_game(cfg.game, cfg.m);
  const std::size_t m = game.m();
  const bool ml = cfg.algorithm == "ml-dfa", sg = cfg.algorithm == "sg-dfa", simplex = cfg.algorithm == "simplex-dfa";
  const auto& K = r.summary.constants;
  std::vector<ProperLoss> proper;
  for (std::size_t t = 0; t < K.size(); ++t) {
    if (ml) {
      const auto& ev = cfg.evaluators[t / cfg.experts.size()];
      proper.push_back(canonical_proper_loss(builtin_game(ev.game, m), ev.eta));
    } else {
      proper.push_back(default_proper_loss(game, cfg.c, cfg.eta));
    }
  }
  std::vector<double> logw;
  for (const auto& k : K) logw.push_back(std::log(k.prior));
  const int grid = m == 2 ? 20000 : 150;

  for (std::size_t n = 0; n < r.records.size() && n < limit; ++n) {
    const auto& rec = r.records[n];
    // once every expert is out of the running Learner falls back to the prior
    std::vector<double> w(logw.size());
    const double lv = log_sum_exp(logw);
    for (std::size_t t = 0; t < w.size(); ++t) w[t] = lv == -kInf ? K[t].prior : std::exp(logw[t] - lv);

    std::vector<SecondGuessExpert> experts;
    if (sg)
      for (std::size_t t = 0; t < K.size(); ++t) {
        const auto& type = cfg.experts[t].type;
        if (type == "second-guess-contrarian")
          experts.push_back(contrarian_expert(game));
        else if (type == "second-guess-identity")
          experts.push_back(identity_expert());
        else if (type == "second-guess-flip")
          experts.push_back(flip_expert(game));
        else
          experts.push_back(constant_expert(LossVector(rec.advice[t])));
      }
    auto qvec = [&](const Distribution& pi) {
      std::vector<double> out(m, 0.0);
      std::vector<LossVector> adv;
      if (sg) {
        LossVector lam = proper[0](pi);
        Decision d = proper[0].decision ? proper[0].decision(pi) : substitute(game, lam);
        for (const auto& e : experts) adv.push_back(e(game.prediction(d)));
      } else {
        for (const auto& a : rec.advice) adv.push_back(LossVector(a));
      }
      for (std::size_t t = 0; t < K.size(); ++t) {
        if (w[t] == 0) continue;
        LossVector lam = proper[t](pi);
        for (std::size_t o = 0; o < m; ++o) out[o] += w[t] * q_value(lam[o], K[t].c, K[t].eta, adv[t][o]);
      }
      return out;
    };
    auto qmax = [&](const Distribution& pi) {
      auto v = qvec(pi);
      return *std::max_element(v.begin(), v.end());
    };
    const Distribution pi(rec.pi);
    const double got = qmax(pi);
    auto orc = oracle_dfa_min([&](const Distribution& p, std::size_t o) { return qvec(p)[o]; }, m, grid);

    // binary interior points are fixed points, full simplex runs are minimizations; both must reach the optimum
    bool minimizing;
    double tol;
    if (m == 2) {
      minimizing = !rec.violated && pi[1] > 0 && pi[1] < 1;
      tol = 1e-9;
    } else {
      minimizing = pi.probs() != Distribution::uniform(m).probs();
      tol = 1e-6;
    }
    const double admissible = got - std::max(1.0, orc.value);
    st.worst_admissible = std::max(st.worst_admissible, admissible);
    bool ok = rec.violated ? got <= orc.value + tol : admissible <= tol;
    if (minimizing) {
      st.worst_value_gap = std::max(st.worst_value_gap, got - orc.value);
      ok = ok && got <= orc.value + tol;
    }
    if (!ok) ++st.mismatches;
    ++st.steps;

    // weights after the outcome
    for (std::size_t t = 0; t < K.size(); ++t) {
      double learner, expert = rec.expert_loss[t];
      if (simplex || ml)
        learner = rec.learner_loss[rec.learner_loss.size() == 1 ? 0 : t];
      else
        learner = proper[t](pi)[rec.outcome];
      if (logw[t] != -kInf) logw[t] += log_q_value(learner, K[t].c, K[t].eta, expert);
    }
  }
  return st;
}

void ac12() {
  std::size_t steps = 0, bad = 0;
  double gap = -kInf, adm = -kInf;
  std::string failed;
  for (const char* name : {"log_dfa", "log_dfa_k10", "square_dfa_adversarial", "absolute_dfa_realizable",
                           "sg_dfa_contrarian", "sg_flip_simple", "ml_dfa_log_square", "simplex_brier",
                           "simplex_kl"}) {
    auto cfg = scenario(name);
    auto s = oracle_replay(cfg, cfg.m == 2 ? 100 : 40);
    steps += s.steps;
    bad += s.mismatches;
    gap = std::max(gap, s.worst_value_gap);
    adm = std::max(adm, s.worst_admissible);
    if (s.mismatches) failed += std::string(" ") + name;
  }
  report(12, bad == 0 && steps > 0,
         fmt("%g steps replayed, worst (solver - grid optimum) %.3g, worst excess over max(1, optimum) %.3g",
             static_cast<double>(steps), gap, adm) +
             (failed.empty() ? "" : "; mismatches in" + failed));
}

void ac13() {
  std::size_t count = 0, differ = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PEA_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    auto cfg = load_config(entry.path().string());
    if (to_jsonl(run_scenario(cfg).records) != to_jsonl(run_scenario(cfg).records)) ++differ;
    ++count;
  }
  report(13, count > 0 && differ == 0, fmt("%g shipped scenarios, %g with differing JSONL", static_cast<double>(count),
                                           static_cast<double>(differ)));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> all{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10, ac11, ac12, ac13};
  for (std::size_t i = 0; i < all.size(); ++i) {
    try {
      all[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("threw: ") + e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
