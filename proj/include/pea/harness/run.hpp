#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "../extensions.hpp"
#include "../secondguess.hpp"
#include "audit.hpp"
#include "config.hpp"
#include "io.hpp"

namespace pea {

// Named advice strategies for the "callback" expert type.
using AdviceCallback = std::function<Decision(const Game&, std::size_t step, const std::vector<std::size_t>& history)>;
using CallbackRegistry = std::map<std::string, AdviceCallback>;

inline Decision binary_decision(const Game& game, double p) {
  if (game.domain == DomainKind::simplex) return {1 - p, p};
  if (game.domain == DomainKind::discrete) return {p >= 0.5 ? 1.0 : 0.0};
  return {p};
}

inline const CallbackRegistry& default_callbacks() {
  static const CallbackRegistry reg{
      // repeats the last outcome
      {"last-outcome",
       [](const Game& g, std::size_t, const std::vector<std::size_t>& h) -> Decision {
         if (g.m() != 2) throw ConfigError("last-outcome callback is binary");
         return binary_decision(g, h.empty() ? 0.5 : static_cast<double>(h.back()));
       }},
      // alternates between the extreme decisions
      {"alternate",
       [](const Game& g, std::size_t step, const std::vector<std::size_t>&) -> Decision {
         if (g.m() != 2) throw ConfigError("alternate callback is binary");
         return binary_decision(g, step % 2 ? 1.0 : 0.0);
       }},
  };
  return reg;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  bool strict = false;  // no slack allowance in the bound audit
  const CallbackRegistry* callbacks = nullptr;
};

struct ScenarioSummary {
  std::string name, algorithm, game;
  std::size_t m = 2, N = 0;
  std::uint64_t seed = 0;
  std::vector<ThetaConstants> constants;
  std::vector<BoundReport> bounds;
  MonotoneReport monotone;
  double max_bound_margin = -kInf;
  std::size_t worst_theta = 0;
  double cumulative_log_slack = 0;
  double max_regret = -kInf;  // max over experts of L_N - L_N^theta
  double regret_per_step = 0;
  std::size_t violations = 0;  // steps where the solver missed its contract (recorded mode)
  double max_fixed_point_residual = 0;
  std::vector<std::pair<std::string, ContinuityProbe>> continuity;  // second-guessing experts only
  std::string error;  // realizability or solver error that stopped the run
  bool audits_ok = false;
  std::string expect = "pass";
  bool expectation_met = false;
};

struct RunResult {
  std::vector<StepRecord> records;
  ScenarioSummary summary;
};

namespace detail {

inline Distribution as_distribution(const Game& game, const Decision& d) {
  if (game.domain == DomainKind::simplex) return Distribution::clean(d);
  if (game.m() == 2) return Distribution::binary(d.at(0));
  throw ConfigError("cannot read a decision of game " + game.name + " as a distribution");
}

// Advice of a non-second-guessing expert for the coming step.
class AdviceSource {
 public:
  AdviceSource(ExpertSpec spec, const Game& game, Rng rng, const CallbackRegistry& cbs)
      : spec_(std::move(spec)), game_(game), rng_(rng) {
    if (spec_.type == "callback") {
      auto it = cbs.find(spec_.callback);
      if (it == cbs.end()) throw ConfigError("unknown callback " + spec_.callback);
      cb_ = it->second;
    }
  }

  Decision next(std::size_t step, const std::vector<std::size_t>& history,
                const std::vector<std::vector<double>>& points) {
    const auto& t = spec_.type;
    if (t == "constant") return spec_.decision;
    if (t == "iid-random") return random_decision(game_, rng_);
    if (t == "callback") return cb_(game_, step, history);
    if (t == "trailing-average") {
      const std::size_t m = game_.m();
      std::vector<double> f(m, 1.0);  // Laplace smoothing
      std::size_t n = history.size(), from = spec_.window && spec_.window < n ? n - spec_.window : 0;
      for (std::size_t i = from; i < n; ++i) {
        if (!points.empty())
          for (std::size_t o = 0; o < m; ++o) f[o] += points[i][o];
        else
          f[history[i]] += 1.0;
      }
      auto p = Distribution::from_weights(f);
      if (game_.domain == DomainKind::simplex) return p.probs();
      return binary_decision(game_, p[1]);
    }
    throw ConfigError("expert type " + t + " has no plain advice");
  }

 private:
  ExpertSpec spec_;
  Game game_;
  Rng rng_;
  AdviceCallback cb_;
};

inline std::size_t argmax_loss(const std::vector<ExtReal>& l) {
  std::size_t best = 0;
  for (std::size_t w = 1; w < l.size(); ++w)
    if (l[w] > l[best]) best = w;
  return best;
}

class Reality {
 public:
  Reality(RealitySpec spec, std::size_t m, Rng rng) : spec_(std::move(spec)), m_(m), rng_(rng) {}

  // Draws that do not depend on Learner happen before the prediction so that
  // every algorithm sees the same outcomes for the same seed.
  void prepare(std::size_t step) {
    if (spec_.type == "iid") {
      double u = rng_.uniform(), acc = 0;
      pending_ = m_ - 1;
      for (std::size_t w = 0; w < m_; ++w) {
        acc += spec_.probs[w];
        if (u < acc) {
          pending_ = w;
          break;
        }
      }
    } else if (spec_.type == "sequence") {
      pending_ = spec_.outcomes[(step - 1) % spec_.outcomes.size()];
    } else if (spec_.type == "dirichlet") {
      point_ = Distribution::from_weights(rng_.dirichlet(m_, spec_.alpha)).probs();
      pending_ = argmax_loss(point_);
    }
  }
  bool adversarial() const { return spec_.type == "adversarial"; }
  std::size_t outcome() const { return pending_; }
  const std::vector<double>& point() const { return point_; }

 private:
  RealitySpec spec_;
  std::size_t m_;
  Rng rng_;
  std::size_t pending_ = 0;
  std::vector<double> point_;
};

inline std::vector<double> prior_of(const ScenarioConfig& cfg, std::size_t parties) {
  if (!cfg.prior.empty()) return cfg.prior;
  return Distribution::uniform(parties).probs();
}

inline DfaOptions dfa_options(const ScenarioConfig& cfg) {
  DfaOptions o;
  o.epsilon = cfg.solver.epsilon;
  o.tol = cfg.solver.tol;
  o.record_violations = cfg.solver.record_violations;
  o.selection = cfg.solver.selection == "midpoint" ? BinarySelection::admissible_midpoint : BinarySelection::fixed_point;
  return o;
}


inline void fill_margins(StepRecord& r, const std::vector<ThetaConstants>& k) {
  r.bound_margins.clear();
  for (std::size_t t = 0; t < k.size(); ++t) {
    std::size_t li = r.learner_cumulative.size() == 1 ? 0 : t;
    r.bound_margins.push_back(bound_margin(r.learner_cumulative[li], r.expert_cumulative[t], k[t].c, k[t].eta,
                                           k[t].prior, r.cumulative_log_slack));
  }
}

}  // namespace detail

inline RunResult run_scenario(const ScenarioConfig& cfg_in, const RunOptions& opt = {}) {
  ScenarioConfig cfg = cfg_in;
  if (opt.seed) cfg.seed = *opt.seed;
  const CallbackRegistry& cbs = opt.callbacks ? *opt.callbacks : default_callbacks();
  const Game game = builtin_game(cfg.game, cfg.m);
  const std::size_t m = game.m(), K = cfg.experts.size();
  const bool ml = cfg.algorithm == "ml-dfa";
  const bool simplex = cfg.algorithm == "simplex-dfa";

  RunResult res;
  auto& sum = res.summary;
  sum.name = cfg.name;
  sum.algorithm = cfg.algorithm;
  sum.game = cfg.game;
  sum.m = m;
  sum.seed = cfg.seed;
  sum.expect = cfg.expect;

  // parties and their constants
  const std::size_t parties = ml ? K * cfg.evaluators.size() : K;
  const auto prior = detail::prior_of(cfg, parties);
  std::vector<EvaluatedExpert> evaluated;
  if (ml) {
    for (std::size_t e = 0; e < cfg.evaluators.size(); ++e) {
      const auto& ev = cfg.evaluators[e];
      Game eg = builtin_game(ev.game, m);
      for (std::size_t t = 0; t < K; ++t) {
        EvaluatedExpert x{canonical_proper_loss(eg, ev.eta), ev.c, ev.eta, prior[e * K + t],
                          ev.game + "#" + std::to_string(t)};
        evaluated.push_back(x);
        sum.constants.push_back({ev.c, ev.eta, x.prior, x.label});
      }
    }
  } else {
    for (std::size_t t = 0; t < K; ++t)
      sum.constants.push_back(
          {cfg.c, cfg.eta, prior[t], cfg.experts[t].label.empty() ? cfg.experts[t].type + "#" + std::to_string(t)
                                                                  : cfg.experts[t].label});
  }

  // sources of advice, each on its own stream
  std::vector<std::optional<detail::AdviceSource>> sources(K);
  std::vector<SecondGuessExpert> fixed_sg(K);
  std::vector<bool> is_sg(K, false);
  for (std::size_t t = 0; t < K; ++t) {
    const auto& s = cfg.experts[t];
    if (s.type == "second-guess-contrarian") {
      fixed_sg[t] = contrarian_expert(game);
      is_sg[t] = true;
    } else if (s.type == "second-guess-identity") {
      fixed_sg[t] = identity_expert();
      is_sg[t] = true;
    } else if (s.type == "second-guess-flip") {
      fixed_sg[t] = flip_expert(game);
      is_sg[t] = true;
    } else {
      sources[t].emplace(s, game, Rng::stream(cfg.seed, 1 + t), cbs);
    }
  }
  detail::Reality reality(cfg.reality, m, Rng::stream(cfg.seed, 0));
  // continuity is the caller's contract; probe it on a stream no strategy uses
  for (std::size_t t = 0; t < K; ++t)
    if (is_sg[t]) {
      Rng probe_rng = Rng::stream(cfg.seed, 1 + K + t);
      sum.continuity.emplace_back(sum.constants[t].label, probe_continuity(game, fixed_sg[t], probe_rng));
    }

  const Distribution P0(prior);
  const DfaOptions dopt = detail::dfa_options(cfg);
  std::vector<std::size_t> history;
  std::vector<std::vector<double>> points;

  std::optional<AAState> aa;
  std::optional<Supermartingale> sm;
  std::optional<MlState> mls;
  std::optional<SimplexDfaState> sds;
  try {
    if (cfg.algorithm == "aa" || cfg.algorithm == "sg-aa") aa = aa_init(game, cfg.c, cfg.eta, P0);
    if (cfg.algorithm == "dfa" || cfg.algorithm == "sg-dfa")
      sm = dfa_init(default_proper_loss(game, cfg.c, cfg.eta), cfg.c, cfg.eta, P0);
    if (ml) mls = ml_init(evaluated, false);
    if (simplex) sds = simplex_dfa_init(simplex_game(cfg.game, m), cfg.c, cfg.eta, P0);
  } catch (const Error& e) {
    sum.error = e.what();
  }

  auto advice_decisions = [&](std::size_t n) {
    std::vector<Decision> d(K);
    for (std::size_t t = 0; t < K; ++t)
      if (sources[t]) d[t] = sources[t]->next(n, history, points);
    return d;
  };
  auto pick_outcome = [&](const std::vector<ExtReal>& learner_losses) {
    return reality.adversarial() ? detail::argmax_loss(learner_losses) : reality.outcome();
  };
  auto sg_experts = [&](const std::vector<Decision>& d) {
    std::vector<SecondGuessExpert> out(K);
    for (std::size_t t = 0; t < K; ++t) out[t] = is_sg[t] ? fixed_sg[t] : constant_expert(game.prediction(d[t]));
    return out;
  };
  auto game_losses = [&](const Decision& d) { return game.prediction(d).values(); };

  for (std::size_t n = 1; n <= cfg.horizon && sum.error.empty(); ++n) {
    StepRecord r;
    r.step = n;
    reality.prepare(n);
    try {
      auto d = advice_decisions(n);
      if (cfg.algorithm == "aa") {
        std::vector<LossVector> adv;
        for (const auto& x : d) adv.push_back(game.prediction(x));
        AAPrediction p;
        try {
          p = aa_predict(*aa, adv);
        } catch (const AllWeightsZero&) {
          // every bound is vacuous from here on; mix with the prior instead
          AAState fresh = *aa;
          fresh.log_weights = fresh.log_prior;
          p = aa_predict(fresh, adv);
        }
        r.decision = p.decision;
        r.outcome = pick_outcome(p.prediction.values());
        *aa = aa_update(*aa, adv, p.decision, r.outcome);
        for (const auto& a : adv) r.advice.push_back(a.values());
        r.log_value = aa->log_potential;
      } else if (cfg.algorithm == "dfa") {
        std::vector<LossVector> adv;
        for (const auto& x : d) adv.push_back(game.prediction(x));
        auto p = dfa_predict(*sm, adv, dopt);
        r.pi = p.pi.probs();
        r.decision = p.decision;
        r.slack = p.slack;
        r.violated = p.violated;
        r.outcome = pick_outcome(p.prediction.values());
        *sm = dfa_update(*sm, adv, p, r.outcome);
        for (const auto& a : adv) r.advice.push_back(a.values());
      } else if (cfg.algorithm == "sg-dfa") {
        auto experts = sg_experts(d);
        auto p = sg_dfa_predict(*sm, experts, dopt);
        r.pi = p.pi.probs();
        r.decision = p.decision;
        r.slack = p.slack;
        r.violated = p.violated;
        r.outcome = pick_outcome(p.prediction.values());
        auto adv = detail::eval_experts(game, experts, p.prediction, true);
        *sm = dfa_update(*sm, adv, p, r.outcome);
        for (const auto& a : adv) r.advice.push_back(a.values());
      } else if (cfg.algorithm == "sg-aa") {
        auto experts = sg_experts(d);
        FixedPointOptions fo;
        fo.tol = cfg.solver.fixed_point_tol;
        auto p = sg_aa_fixed_point(*aa, experts, fo);
        sum.max_fixed_point_residual = std::max(sum.max_fixed_point_residual, p.residual);
        r.decision = p.decision;
        r.outcome = pick_outcome(p.prediction.values());
        auto adv = detail::eval_experts(game, experts, p.gamma, true);
        *aa = aa_update(*aa, adv, p.decision, r.outcome);
        for (const auto& a : adv) r.advice.push_back(a.values());
        r.log_value = aa->log_potential;
      } else if (ml) {
        std::vector<Distribution> adv;
        for (std::size_t e = 0; e < cfg.evaluators.size(); ++e)
          for (std::size_t t = 0; t < K; ++t) adv.push_back(detail::as_distribution(game, d[t]));
        auto p = ml_dfa_predict(*mls, adv, dopt);
        r.pi = p.pi.probs();
        r.decision = p.pi.probs();
        r.slack = p.slack;
        r.violated = p.violated;
        r.outcome = pick_outcome(mls->experts[0].proper(p.pi).values());
        for (std::size_t t = 0; t < adv.size(); ++t) {
          r.advice.push_back(mls->experts[t].proper(adv[t]).values());
          r.learner_loss.push_back(mls->experts[t].proper(p.pi)[r.outcome]);
          r.expert_loss.push_back(r.advice.back()[r.outcome]);
        }
        *mls = ml_dfa_update(*mls, adv, p, r.outcome);
      } else if (simplex) {
        auto p = simplex_dfa_predict(*sds, d, dopt);
        r.pi = p.vertex.pi.probs();
        r.decision = p.decision;
        r.slack = p.vertex.slack;
        r.violated = p.vertex.violated;
        std::vector<double> pt;
        if (cfg.reality.type == "dirichlet") {
          r.outcome = reality.outcome();
          pt = reality.point();
          r.outcome_point = pt;
        } else {
          r.outcome = pick_outcome(game_losses(p.decision));
          pt = Distribution::point_mass(m, r.outcome).probs();
        }
        const Distribution at(pt);
        *sds = simplex_dfa_update(*sds, d, p, at);
        for (const auto& x : d) r.advice.push_back(game.prediction(x).values());
        r.learner_loss = {sds->sg.loss_on_simplex(p.decision, at)};
        for (const auto& x : d) r.expert_loss.push_back(sds->sg.loss_on_simplex(x, at));
        points.push_back(pt);
      }
    } catch (const RealizabilityError& e) {
      sum.error = e.what();
      break;
    } catch (const SlackExceeded& e) {
      sum.error = e.what();
      break;
    } catch (const NoConvergence& e) {
      sum.error = e.what();
      break;
    }
    // per-party losses and cumulative state
    if (cfg.algorithm == "aa" || cfg.algorithm == "sg-aa") {
      r.learner_loss = {game.loss(r.decision, r.outcome)};
      r.learner_cumulative = {aa->cumulative_loss};
      for (const auto& a : r.advice) r.expert_loss.push_back(a[r.outcome]);
      r.expert_cumulative = aa->per_expert_loss;
    } else if (cfg.algorithm == "dfa" || cfg.algorithm == "sg-dfa") {
      r.learner_loss = {game.loss(r.decision, r.outcome)};
      r.learner_cumulative = {sm->cumulative_loss};
      for (const auto& a : r.advice) r.expert_loss.push_back(a[r.outcome]);
      r.expert_cumulative = sm->per_expert_loss;
      r.log_value = sm->log_value;
      r.cumulative_log_slack = sm->cumulative_log_slack;
    } else if (ml) {
      r.learner_cumulative = mls->learner_loss;
      r.expert_cumulative = mls->expert_loss;
      r.log_value = mls->log_value;
      r.cumulative_log_slack = mls->cumulative_log_slack;
    } else if (simplex) {
      r.learner_cumulative = {sds->sm.cumulative_loss};
      r.expert_cumulative = sds->sm.per_expert_loss;
      r.log_value = sds->sm.log_value;
      r.cumulative_log_slack = sds->sm.cumulative_log_slack;
    }
    if (r.violated) ++sum.violations;
    history.push_back(r.outcome);
    detail::fill_margins(r, sum.constants);
    res.records.push_back(std::move(r));
  }

  // audits
  sum.N = res.records.size();
  for (std::size_t t = 0; t < sum.constants.size(); ++t) {
    const auto& k = sum.constants[t];
    auto b = verify_bound(res.records, t, k.c, k.eta, k.prior, opt.strict);
    if (b.worst_margin > sum.max_bound_margin) {
      sum.max_bound_margin = b.worst_margin;
      sum.worst_theta = t;
    }
    sum.bounds.push_back(b);
  }
  sum.monotone = verify_nonincrease(res.records, 0.0);
  if (!res.records.empty()) {
    const auto& last = res.records.back();
    sum.cumulative_log_slack = last.cumulative_log_slack;
    for (std::size_t t = 0; t < last.expert_cumulative.size(); ++t) {
      std::size_t li = last.learner_cumulative.size() == 1 ? 0 : t;
      sum.max_regret = std::max(sum.max_regret, last.learner_cumulative[li] - last.expert_cumulative[t]);
    }
    sum.regret_per_step = sum.max_regret / static_cast<double>(sum.N);
  } else {
    sum.max_regret = 0;
  }
  bool bounds_ok = true;
  for (const auto& b : sum.bounds) bounds_ok = bounds_ok && b.ok;
  sum.audits_ok = sum.error.empty() && bounds_ok && sum.monotone.ok && sum.violations == 0;
  if (cfg.expect == "pass")
    sum.expectation_met = sum.audits_ok;
  else
    sum.expectation_met = !sum.audits_ok && sum.regret_per_step >= cfg.expect_regret_at_least;
  return res;
}

// ---------------------------------------------------------------- artifacts

inline std::string summary_csv(const ScenarioSummary& s) {
  std::string out =
      "scenario,algorithm,game,m,N,seed,theta,label,c,eta,prior,bound_constant,worst_margin,worst_step,ok,"
      "cumulative_log_slack,max_regret,audits_ok,expect,expectation_met\n";
  for (std::size_t t = 0; t < s.constants.size(); ++t) {
    const auto& k = s.constants[t];
    const auto& b = s.bounds[t];
    out += s.name + "," + s.algorithm + "," + s.game + "," + std::to_string(s.m) + "," + std::to_string(s.N) + "," +
           std::to_string(s.seed) + "," + std::to_string(t) + "," + k.label + "," + csv_number(k.c) + "," +
           csv_number(k.eta) + "," + csv_number(k.prior) + "," + csv_number((k.c / k.eta) * std::log(1 / k.prior)) +
           "," + csv_number(b.worst_margin) + "," + std::to_string(b.worst_step) + "," + (b.ok ? "true" : "false") +
           "," + csv_number(s.cumulative_log_slack) + "," + csv_number(s.max_regret) + "," +
           (s.audits_ok ? "true" : "false") + "," + s.expect + "," + (s.expectation_met ? "true" : "false") + "\n";
  }
  return out;
}

inline ojson meta_json(const ScenarioConfig& cfg, const ScenarioSummary& s) {
  ojson j;
  j["scenario"] = s.name;
  j["algorithm"] = s.algorithm;
  j["game"] = s.game;
  j["m"] = s.m;
  j["horizon"] = cfg.horizon;
  j["seed"] = s.seed;
  j["rng"] = "xoshiro256** (splitmix64 seeding); stream 0 reality, stream 1+t expert t";
  ojson th = ojson::array();
  for (const auto& k : s.constants) {
    ojson e;
    e["label"] = k.label;
    e["c"] = k.c;
    e["eta"] = k.eta;
    e["prior"] = k.prior;
    th.push_back(e);
  }
  j["experts"] = th;
  if (!s.continuity.empty()) {
    ojson probes = ojson::array();
    for (const auto& [label, p] : s.continuity) {
      ojson e;
      e["label"] = label;
      e["pairs"] = p.pairs;
      e["worst_ratio"] = p.worst_ratio;
      e["suspect"] = p.suspect;
      probes.push_back(e);
    }
    j["continuity"] = probes;
  }
  j["expect"] = s.expect;
  j["error"] = s.error;
  return j;
}

// Writes trajectory (jsonl), summary (csv) and meta.json into dir.
inline void write_outputs(const ScenarioConfig& cfg, const RunResult& r, const std::string& dir,
                          const std::string& format = "jsonl") {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  if (format == "jsonl" || format == "both") write_file((d / cfg.trajectory_file).string(), to_jsonl(r.records));
  write_file((d / cfg.summary_file).string(), summary_csv(r.summary));
  write_file((d / "meta.json").string(), meta_json(cfg, r.summary).dump(2) + "\n");
}

// Re-audits a trajectory against the constants in meta.json.
struct VerifyReport {
  bool ok = true;
  std::vector<BoundReport> bounds;
  MonotoneReport monotone;
};

inline VerifyReport verify_trajectory(const std::vector<StepRecord>& traj, const std::vector<ThetaConstants>& k,
                                      bool strict = false) {
  VerifyReport v;
  for (std::size_t t = 0; t < k.size(); ++t) {
    v.bounds.push_back(verify_bound(traj, t, k[t].c, k[t].eta, k[t].prior, strict));
    v.ok = v.ok && v.bounds.back().ok;
  }
  v.monotone = verify_nonincrease(traj, 0.0);
  v.ok = v.ok && v.monotone.ok;
  return v;
}

inline std::vector<ThetaConstants> read_meta_constants(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  auto j = nlohmann::json::parse(in);
  std::vector<ThetaConstants> k;
  for (const auto& e : j.at("experts"))
    k.push_back({e.at("c").get<double>(), e.at("eta").get<double>(), e.at("prior").get<double>(),
                 e.at("label").get<std::string>()});
  return k;
}

}  // namespace pea
