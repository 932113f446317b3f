#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "aggregating.hpp"
#include "defensive.hpp"

namespace pea {

struct NoConvergence : Error {
  NoConvergence(LossVector last, double residual)
      : Error("fixed-point iteration did not converge"), last_iterate(std::move(last)), last_residual(residual) {}
  LossVector last_iterate;
  double last_residual;
};

// An expert whose advice depends on Learner's forthcoming prediction gamma
// (given as a loss vector).
struct SecondGuessExpert {
  std::function<LossVector(const LossVector&)> map;
  std::optional<double> continuity_modulus;
  std::string label;

  LossVector operator()(const LossVector& gamma) const { return map(gamma); }
};

inline SecondGuessExpert constant_expert(LossVector g) {
  return {[g](const LossVector&) { return g; }, 0.0, "constant"};
}

inline SecondGuessExpert identity_expert() {
  return {[](const LossVector& g) { return g; }, 1.0, "identity"};
}

// Binary games: predicts with decision 1 - p where p is Learner's decision.
inline SecondGuessExpert contrarian_expert(const Game& game) {
  if (game.m() != 2 || game.domain == DomainKind::discrete)
    throw InvalidArgument("the continuous contrarian needs a connected binary game");
  auto decide = [game](double p) -> Decision {
    if (game.domain == DomainKind::simplex) return {1 - p, p};
    return {p};
  };
  return {[game, decide](const LossVector& g) {
            Decision d = substitute(game, g, 1e-7);
            return game.prediction(decide(1 - d.back()));
          },
          std::nullopt, "contrarian"};
}

// For games with isolated predictions: always the other prediction.
// Discontinuous by construction.
inline SecondGuessExpert flip_expert(const Game& game) {
  if (game.domain != DomainKind::discrete || game.discrete_points.size() != 2)
    throw InvalidArgument("the flip expert needs a two-point game");
  return {[game](const LossVector& g) {
            Decision d = substitute(game, g, 1e-7);
            const auto& other = d == game.discrete_points[0] ? game.discrete_points[1] : game.discrete_points[0];
            return game.prediction(other);
          },
          std::nullopt, "flip"};
}

namespace detail {

inline std::vector<LossVector> eval_experts(const Game& game, const std::vector<SecondGuessExpert>& experts,
                                            const LossVector& gamma, bool validate) {
  std::vector<LossVector> out;
  out.reserve(experts.size());
  for (const auto& e : experts) {
    LossVector g = e(gamma);
    if (validate && (g.size() != game.m() || !is_superprediction(game, g, 1e-7)))
      throw DomainError("a second-guessing expert returned a vector outside the superprediction set");
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- DFA

struct SgDfaStep {
  DfaPrediction prediction;
  std::vector<LossVector> advice;  // Gamma_theta evaluated at the announced prediction
  Supermartingale state;
};

inline DfaPrediction sg_dfa_predict(const Supermartingale& s, const std::vector<SecondGuessExpert>& experts,
                                    const DfaOptions& opt = {}) {
  if (experts.size() != s.experts()) throw DimensionMismatch("expert count differs from the prior");
  const Game& game = s.game();
  const auto w = detail::normalized_weights(s.log_weights, s.log_value, s.log_prior);
  const std::size_t m = game.m();
  auto qvec = [&](const Distribution& pi) {
    LossVector lam = s.proper(pi);
    Decision d = s.proper.decision ? s.proper.decision(pi) : substitute(game, lam);
    LossVector gamma = game.prediction(d);
    std::vector<double> out(m, 0.0);
    for (std::size_t t = 0; t < experts.size(); ++t) {
      if (w[t] == 0) continue;
      LossVector g = experts[t](gamma);
      for (std::size_t o = 0; o < m; ++o) out[o] += w[t] * q_value(lam[o], s.c, s.eta, g[o]);
    }
    return out;
  };
  return detail::dfa_solve(game, s.proper, qvec, opt);
}

inline SgDfaStep sg_dfa_step(const Supermartingale& s, const std::vector<SecondGuessExpert>& experts, std::size_t omega,
                             const DfaOptions& opt = {}) {
  auto pred = sg_dfa_predict(s, experts, opt);
  auto advice = detail::eval_experts(s.game(), experts, pred.prediction, true);
  return {pred, advice, dfa_update(s, advice, pred, omega)};
}

// ---------------------------------------------------------------- fixed-point AA

struct FixedPointOptions {
  double tol = 1e-10;
  double damping = 0.5;
  int max_iterations = 10000;
};

struct SgAaPrediction {
  LossVector gamma;  // fixed point
  Decision decision;
  LossVector prediction;
  LossVector mix;    // -(c/eta) ln sum wbar e^{-eta Gamma(gamma)}
  double residual;   // sup |e^{-eta gamma} - e^{-eta T(gamma)}|
  int iterations;
};

namespace detail {

// Distance in the exp(-eta g) chart, where infinite losses sit at 0.
inline double chart_distance(const LossVector& a, const LossVector& b, double eta) {
  a.check_same(b);
  double d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d = std::max(d, std::abs(exp_neg(eta, a[w]) - exp_neg(eta, b[w])));
  return d;
}

// T(gamma) = F(mix(Gamma(gamma))) for c = 1; V(F_hull(mix_1(Gamma(gamma)))) otherwise.
inline LossVector sg_aa_map(const AAState& s, const std::vector<SecondGuessExpert>& experts, const LossVector& gamma) {
  std::vector<LossVector> adv;
  for (const auto& e : experts) adv.push_back(e(gamma));
  if (s.c == 1.0) return retraction_F(s.game, mix_log_weights(s.log_weights, adv, 1.0, s.eta));
  LossVector hull = retraction_F(s.game, mix_log_weights(s.log_weights, adv, 1.0, s.eta), s.eta);
  return project_boundary(s.game, hull, s.c, s.eta);
}

}  // namespace detail

// Finite-difference spot check of an expert's continuity: the ratio of output
// to input distance (exp chart, eta = 1) over pairs of nearby predictions.
struct ContinuityProbe {
  int pairs = 0;
  double worst_ratio = 0;
  bool suspect = false;  // ratio above the declared modulus, or above 1e3 without one
  Decision witness_a, witness_b;
};

inline ContinuityProbe probe_continuity(const Game& game, const SecondGuessExpert& e, Rng& rng, int pairs = 100,
                                        double step = 1e-4) {
  ContinuityProbe r;
  if (game.domain == DomainKind::discrete) return r;  // isolated predictions, nothing nearby to compare
  for (int i = 0; i < pairs; ++i) {
    Decision a, b;
    if (game.domain == DomainKind::simplex) {
      auto x = rng.dirichlet(game.m()), y = rng.dirichlet(game.m());
      for (auto& v : x) v = 0.02 + 0.96 * v;
      a = Distribution::clean(x).probs();
      b.resize(a.size());
      for (std::size_t o = 0; o < a.size(); ++o) b[o] = (1 - step) * a[o] + step * y[o];
    } else {
      for (std::size_t k = 0; k < game.decision_dim; ++k) {
        a.push_back(rng.uniform(0.02, 0.98));
        b.push_back(a.back() + (rng.below(2) ? step : -step));
      }
    }
    LossVector ga = game.prediction(a), gb = game.prediction(b);
    double in = detail::chart_distance(ga, gb, 1.0);
    if (in == 0) continue;
    double ratio = detail::chart_distance(e(ga), e(gb), 1.0) / in;
    ++r.pairs;
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.witness_a = a;
      r.witness_b = b;
    }
  }
  r.suspect = r.worst_ratio > (e.continuity_modulus ? *e.continuity_modulus * (1 + 1e-6) : 1e3);
  return r;
}

inline SgAaPrediction sg_aa_fixed_point(const AAState& s, const std::vector<SecondGuessExpert>& experts,
                                        const FixedPointOptions& opt = {}) {
  if (experts.size() != s.experts()) throw DimensionMismatch("expert count differs from the prior");
  const Game& game = s.game;
  auto T = [&](const LossVector& g) { return detail::sg_aa_map(s, experts, g); };
  auto finish = [&](const LossVector& gamma, int it) {
    SgAaPrediction r;
    r.gamma = gamma;
    r.decision = substitute(game, gamma, 1e-7);
    r.prediction = game.prediction(r.decision);
    std::vector<LossVector> adv;
    for (const auto& e : experts) adv.push_back(e(gamma));
    r.mix = detail::mix_log_weights(s.log_weights, adv, s.c, s.eta);
    r.residual = detail::chart_distance(gamma, T(gamma), s.eta);
    r.iterations = it;
    return r;
  };

  if (game.m() == 2 && game.domain != DomainKind::discrete) {
    // gamma is parametrized by the decision p; the map p -> decision(T(prediction(p)))
    // sends [0,1] into itself, so p - T(p) changes sign
    auto decide = [&](double p) -> Decision {
      if (game.domain == DomainKind::simplex) return {1 - p, p};
      return {p};
    };
    auto t_of = [&](double p) { return substitute(game, T(game.prediction(decide(p))), 1e-7).back(); };
    auto phi = [&](double p) { return t_of(p) - p; };
    double lo = 0, hi = 1, p = 0.5;
    int it = 0;
    // |phi| below this is rounding in the retraction
    const double flat = std::max(opt.tol * 1e-2, 1e-14);
    if (phi(0.0) <= flat) {
      p = 0.0;
    } else if (phi(1.0) >= -flat) {
      p = 1.0;
    } else {
      for (; it < 200; ++it) {
        p = 0.5 * (lo + hi);
        if (p <= lo || p >= hi) break;
        double v = phi(p);
        if (std::abs(v) <= flat) break;
        (v > 0 ? lo : hi) = p;
      }
    }
    return finish(game.prediction(decide(p)), it);
  }

  // damped iteration in the exp(-eta g) chart, from the plain mix at the barycenter
  Decision start;
  if (game.domain == DomainKind::simplex) start = Distribution::uniform(game.m()).probs();
  else if (game.domain == DomainKind::discrete) start = game.discrete_points.at(0);
  else start.assign(game.decision_dim, 0.5);
  LossVector gamma = T(game.prediction(start));
  const double eta = s.eta;
  for (int it = 0; it < opt.max_iterations; ++it) {
    LossVector next = T(gamma);
    double res = detail::chart_distance(gamma, next, eta);
    if (res <= opt.tol) return finish(next, it + 1);
    std::vector<ExtReal> v(game.m());
    for (std::size_t w = 0; w < v.size(); ++w) {
      double u = (1 - opt.damping) * exp_neg(eta, gamma[w]) + opt.damping * exp_neg(eta, next[w]);
      v[w] = u > 0 ? std::max(0.0, -std::log(u) / eta) : kInf;
    }
    gamma = LossVector(v);
    if (it + 1 == opt.max_iterations) throw NoConvergence(gamma, res);
  }
  throw NoConvergence(gamma, kInf);
}

struct SgAaStep {
  SgAaPrediction prediction;
  std::vector<LossVector> advice;
  AAState state;
};

inline SgAaStep sg_aa_step(const AAState& s, const std::vector<SecondGuessExpert>& experts, std::size_t omega,
                           const FixedPointOptions& opt = {}) {
  auto pred = sg_aa_fixed_point(s, experts, opt);
  auto advice = detail::eval_experts(s.game, experts, pred.gamma, true);
  return {pred, advice, aa_update(s, advice, pred.decision, omega)};
}

}  // namespace pea
