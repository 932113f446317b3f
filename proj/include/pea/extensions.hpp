#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "defensive.hpp"

namespace pea {

struct PreconditionUnverified : Error {
  using Error::Error;
};

// ---------------------------------------------------------------- expert evaluators

struct EvaluatedExpert {
  ProperLoss proper;  // lambda^theta
  double c = 1.0;
  double eta = 1.0;
  double prior = 1.0;
  std::string label;
};

struct MlState {
  std::vector<EvaluatedExpert> experts;
  std::vector<double> log_prior;
  std::vector<double> log_weights;
  double log_value = 0;
  std::size_t step_count = 0;
  std::vector<ExtReal> learner_loss;  // L^(theta): Learner scored by lambda^theta
  std::vector<ExtReal> expert_loss;   // L^theta: expert scored by its own lambda^theta
  double cumulative_log_slack = 0;
  double max_log_increase = -kInf;

  std::size_t m() const { return experts.at(0).proper.game.m(); }
};

inline MlState ml_init(std::vector<EvaluatedExpert> experts, bool verify = true) {
  if (experts.empty()) throw InvalidArgument("no experts");
  double total = 0;
  for (const auto& e : experts) {
    if (!(e.c >= 1) || !(e.eta > 0) || !(e.prior >= 0)) throw InvalidArgument("bad evaluator constants");
    if (e.proper.game.m() != experts[0].proper.game.m()) throw DimensionMismatch("evaluators disagree on |Omega|");
    total += e.prior;
  }
  if (std::abs(total - 1) > 1e-9) throw InvalidArgument("evaluator priors must sum to 1");
  if (verify) {
    for (const auto& e : experts) {
      auto rep = supermartingale_property_check(e.proper, e.c, e.eta, e.proper.game, 2000);
      if (rep.max_excess > 1e-9)
        throw PreconditionUnverified("evaluator " + e.label + " fails the supermartingale property");
    }
  }
  MlState s;
  s.experts = std::move(experts);
  for (const auto& e : s.experts) s.log_prior.push_back(e.prior > 0 ? std::log(e.prior) : -kInf);
  s.log_weights = s.log_prior;
  s.log_value = log_sum_exp(s.log_weights);
  s.learner_loss.assign(s.experts.size(), 0.0);
  s.expert_loss.assign(s.experts.size(), 0.0);
  return s;
}

struct MlPrediction {
  Distribution pi = Distribution::uniform(2);
  double slack = 0;
  bool violated = false;
};

inline MlPrediction ml_dfa_predict(const MlState& s, const std::vector<Distribution>& advice, const DfaOptions& opt = {}) {
  if (advice.size() != s.experts.size()) throw DimensionMismatch("advice length differs from the number of experts");
  const std::size_t m = s.m();
  const auto w = detail::normalized_weights(s.log_weights, s.log_value, s.log_prior);
  std::vector<LossVector> own;
  for (std::size_t t = 0; t < advice.size(); ++t) own.push_back(s.experts[t].proper(advice[t]));
  auto qvec = [&](const Distribution& pi) {
    std::vector<double> out(m, 0.0);
    for (std::size_t t = 0; t < s.experts.size(); ++t) {
      if (w[t] == 0) continue;
      const auto& e = s.experts[t];
      LossVector lam = e.proper(pi);
      for (std::size_t o = 0; o < m; ++o) out[o] += w[t] * q_value(lam[o], e.c, e.eta, own[t][o]);
    }
    return out;
  };
  // the decision is pi itself; solve with the first evaluator's loss as a carrier
  auto p = detail::dfa_solve(s.experts[0].proper.game, s.experts[0].proper, qvec, opt);
  return {p.pi, p.slack, p.violated};
}

inline MlState ml_dfa_update(MlState s, const std::vector<Distribution>& advice, const MlPrediction& pred,
                             std::size_t omega) {
  if (omega >= s.m()) throw DimensionMismatch("outcome index out of range");
  const double before = s.log_value;
  for (std::size_t t = 0; t < s.experts.size(); ++t) {
    const auto& e = s.experts[t];
    ExtReal learner = e.proper(pred.pi)[omega], expert = e.proper(advice[t])[omega];
    s.learner_loss[t] += learner;
    s.expert_loss[t] += expert;
    if (s.log_weights[t] != -kInf) s.log_weights[t] += log_q_value(learner, e.c, e.eta, expert);
  }
  s.log_value = log_sum_exp(s.log_weights);
  s.cumulative_log_slack += std::log1p(pred.slack);
  s.max_log_increase = std::max(s.max_log_increase, s.log_value - before);
  ++s.step_count;
  return s;
}

inline std::tuple<Distribution, MlState, double> ml_dfa_step(const MlState& s, const std::vector<Distribution>& advice,
                                                             std::size_t omega, const DfaOptions& opt = {}) {
  auto p = ml_dfa_predict(s, advice, opt);
  return {p.pi, ml_dfa_update(s, advice, p, omega), p.slack};
}

// Expert-duplication helper: every base prediction is judged once per evaluator
// template, priors split uniformly over all copies.
inline std::vector<EvaluatedExpert> duplicate_over_losses(const std::vector<EvaluatedExpert>& templates,
                                                          std::size_t base_count) {
  std::vector<EvaluatedExpert> out;
  const double prior = 1.0 / static_cast<double>(templates.size() * base_count);
  for (const auto& t : templates)
    for (std::size_t k = 0; k < base_count; ++k) {
      EvaluatedExpert e = t;
      e.prior = prior;
      e.label = t.label + "#" + std::to_string(k);
      out.push_back(e);
    }
  return out;
}

// ---------------------------------------------------------------- simplex outcomes

struct SimplexGame {
  Game base;
  std::function<ExtReal(const Decision&, const Distribution&)> loss_on_simplex;
  std::function<Decision(const Decision&)> extension_map;  // sigma_Omega
  std::string name;
};

inline SimplexGame simplex_game(const std::string& name, std::size_t m) {
  SimplexGame sg;
  sg.name = name;
  sg.extension_map = [](const Decision& d) { return d; };
  if (name == "brier") {
    sg.base = builtin_game(GameName::brier, m);
    sg.loss_on_simplex = [m](const Decision& d, const Distribution& p) -> ExtReal {
      double s = 0;
      for (std::size_t o = 0; o < m; ++o) {
        double t = p[o] - d[o];
        s += t * t;
      }
      return s;
    };
  } else if (name == "kl") {
    sg.base = builtin_game(GameName::kl, m);
    sg.loss_on_simplex = [m](const Decision& d, const Distribution& p) -> ExtReal {
      double s = 0;
      for (std::size_t o = 0; o < m; ++o) {
        if (p[o] == 0) continue;
        if (d[o] <= 0) return kInf;
        s += p[o] * std::log(p[o]) - p[o] * std::log(d[o]);
      }
      return std::max(0.0, s);
    };
  } else if (name == "absolute") {
    if (m != 2) throw InvalidArgument("the absolute game is binary");
    sg.base = builtin_game(GameName::absolute, 2);
    sg.loss_on_simplex = [](const Decision& d, const Distribution& p) -> ExtReal { return std::abs(d[0] - p[1]); };
  } else {
    throw InvalidArgument("no simplex extension for game " + name);
  }
  return sg;
}

struct RelativeExpConvexity {
  double lhs, rhs;
  double excess() const { return lhs - rhs; }
};

inline RelativeExpConvexity relative_exp_convexity_terms(const SimplexGame& sg, double c, double eta,
                                                         const Decision& g1, const Decision& g2,
                                                         const Distribution& p) {
  RelativeExpConvexity r{q_value(sg.loss_on_simplex(g1, p), c, eta, sg.loss_on_simplex(g2, p)), 0.0};
  for (std::size_t w = 0; w < p.size(); ++w)
    if (p[w] > 0) r.rhs += p[w] * q_value(sg.base.loss(g1, w), c, eta, sg.base.loss(g2, w));
  return r;
}

struct ExpConvexityReport {
  bool holds = true;
  double worst_violation = -kInf;
  Decision witness_g1, witness_g2;
  std::vector<double> witness_p;
};

inline ExpConvexityReport check_relative_exp_convexity(const SimplexGame& sg, double c, double eta, int samples,
                                                       double tol = 1e-9, std::uint64_t seed = 1) {
  if (samples < 1) throw InvalidArgument("samples must be >= 1");
  Rng rng(seed);
  ExpConvexityReport rep;
  for (int s = 0; s < samples; ++s) {
    Decision g1 = detail::random_decision(sg.base, rng), g2 = detail::random_decision(sg.base, rng);
    Distribution p = Distribution::from_weights(rng.dirichlet(sg.base.m()));
    auto t = relative_exp_convexity_terms(sg, c, eta, g1, g2, p);
    // relative to the size of the terms, so large exponents do not swamp tol
    double excess = t.excess() / std::max(1.0, t.rhs);
    if (excess > rep.worst_violation) {
      rep.worst_violation = excess;
      rep.witness_g1 = g1;
      rep.witness_g2 = g2;
      rep.witness_p = p.probs();
    }
  }
  rep.holds = rep.worst_violation <= tol;
  return rep;
}

struct SimplexDfaState {
  SimplexGame sg;
  Supermartingale sm;
  bool verified = false;
};

inline SimplexDfaState simplex_dfa_init(SimplexGame sg, double c, double eta, const Distribution& prior,
                                        bool run_checks = true) {
  ProperLoss proper = default_proper_loss(sg.base, c, eta);
  SimplexDfaState s{sg, dfa_init(proper, c, eta, prior), false};
  if (run_checks) {
    auto rc = check_relative_exp_convexity(sg, c, eta, 2000);
    if (!rc.holds) throw PreconditionUnverified("relative exp-convexity fails for " + sg.name);
    auto sm = supermartingale_property_check(proper, c, eta, sg.base, 2000);
    if (sm.max_excess > 1e-9) throw PreconditionUnverified("supermartingale property fails for " + sg.name);
    s.verified = true;
  }
  return s;
}

struct SimplexDfaPrediction {
  DfaPrediction vertex;  // solution of the vertex-outcome game
  Decision decision;     // extended by sigma_Omega
};

inline SimplexDfaPrediction simplex_dfa_predict(const SimplexDfaState& s, const std::vector<Decision>& advice,
                                                const DfaOptions& opt = {}) {
  if (!s.verified) throw PreconditionUnverified("relative exp-convexity and supermartingale checks were skipped");
  std::vector<LossVector> vertex_advice;
  for (const auto& d : advice) vertex_advice.push_back(s.sg.base.prediction(d));
  auto pred = dfa_predict(s.sm, vertex_advice, opt);
  return {pred, s.sg.extension_map(pred.decision)};
}

// Scores everyone at the simplex point and moves Q^{P0} with simplex-point losses.
inline SimplexDfaState simplex_dfa_update(SimplexDfaState s, const std::vector<Decision>& advice,
                                          const SimplexDfaPrediction& pred, const Distribution& outcome) {
  if (outcome.size() != s.sg.base.m()) throw DimensionMismatch("outcome length differs from |Omega|");
  if (advice.size() != s.sm.experts()) throw DimensionMismatch("advice length differs from the number of experts");
  auto& sm = s.sm;
  const double before = sm.log_value;
  const ExtReal learner = s.sg.loss_on_simplex(pred.decision, outcome);
  sm.cumulative_loss += learner;
  for (std::size_t t = 0; t < advice.size(); ++t) {
    ExtReal e = s.sg.loss_on_simplex(s.sg.extension_map(advice[t]), outcome);
    sm.per_expert_loss[t] += e;
    if (sm.log_weights[t] != -kInf) sm.log_weights[t] += log_q_value(learner, sm.c, sm.eta, e);
  }
  sm.log_value = log_sum_exp(sm.log_weights);
  sm.cumulative_log_slack += std::log1p(pred.vertex.slack);
  sm.max_log_increase = std::max(sm.max_log_increase, sm.log_value - before);
  ++sm.step_count;
  return s;
}

inline std::tuple<Decision, SimplexDfaState, double> simplex_dfa_step(const SimplexDfaState& s,
                                                                      const std::vector<Decision>& advice,
                                                                      const Distribution& outcome,
                                                                      const DfaOptions& opt = {}) {
  auto p = simplex_dfa_predict(s, advice, opt);
  return {p.decision, simplex_dfa_update(s, advice, p, outcome), p.vertex.slack};
}

}  // namespace pea
