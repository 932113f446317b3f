#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "core.hpp"
#include "losses.hpp"

namespace pea {

struct NotRealizable : RealizabilityError {
  using RealizabilityError::RealizabilityError;
};

// every expert has infinite cumulative loss, so the posterior is empty
struct AllWeightsZero : Error {
  AllWeightsZero() : Error("every expert has infinite cumulative loss") {}
};

struct AAState {
  Game game;
  double c = 1.0;
  double eta = 1.0;
  std::vector<double> log_prior;    // ln P0(theta)
  std::vector<double> log_weights;  // ln P_{N-1}(theta), unnormalized
  std::size_t step_count = 0;
  ExtReal cumulative_loss = 0;
  std::vector<ExtReal> per_expert_loss;
  double log_potential = 0;  // ln sum_theta P0(theta) exp(eta (L_N / c - L_N^theta))

  std::size_t experts() const { return log_prior.size(); }
  std::vector<double> weights() const {
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
    return w;
  }
  // normalized posterior
  std::vector<double> posterior() const {
    double z = log_sum_exp(log_weights);
    if (z == -kInf) throw AllWeightsZero();
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - z);
    return w;
  }
};

inline std::vector<double> log_of(const Distribution& p) {
  std::vector<double> l(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) l[i] = p[i] > 0 ? std::log(p[i]) : -kInf;
  return l;
}

inline AAState aa_init(Game game, double c, double eta, const Distribution& prior) {
  if (!(c >= 1)) throw InvalidArgument("c must be >= 1");
  if (!(eta > 0)) throw InvalidArgument("eta must be positive");
  AAState s;
  s.game = std::move(game);
  s.c = c;
  s.eta = eta;
  s.log_prior = log_of(prior);
  s.log_weights = s.log_prior;
  s.per_expert_loss.assign(prior.size(), 0.0);
  return s;
}

namespace detail {

// -(c/eta) ln sum_theta wbar_theta e^{-eta gamma_theta(w)} with log weights
inline LossVector mix_log_weights(const std::vector<double>& logw, const std::vector<LossVector>& advice, double c,
                                  double eta) {
  if (advice.size() != logw.size()) throw DimensionMismatch("advice length differs from the number of experts");
  if (advice.empty()) throw InvalidArgument("no experts");
  const double z = log_sum_exp(logw);
  if (z == -kInf) throw AllWeightsZero();
  const std::size_t m = advice[0].size();
  std::vector<ExtReal> g(m);
  std::vector<double> terms;
  for (std::size_t w = 0; w < m; ++w) {
    terms.clear();
    for (std::size_t t = 0; t < advice.size(); ++t) {
      advice[t].check_same(advice[0]);
      if (logw[t] == -kInf || is_inf(advice[t][w])) continue;
      terms.push_back(logw[t] - z - eta * advice[t][w]);
    }
    double l = log_sum_exp(terms);
    g[w] = l == -kInf ? kInf : std::max(0.0, -(c / eta) * l);
  }
  return LossVector(std::move(g));
}

}  // namespace detail

inline LossVector aa_mix(const AAState& s, const std::vector<LossVector>& advice) {
  return detail::mix_log_weights(s.log_weights, advice, s.c, s.eta);
}

struct AAPrediction {
  LossVector g;
  Decision decision;
  LossVector prediction;
};

inline AAPrediction aa_predict(const AAState& s, const std::vector<LossVector>& advice, double tol = 1e-9) {
  LossVector g = aa_mix(s, advice);
  if (!is_superprediction(s.game, g, tol))
    throw SubstitutionFailure("the mixture is not a superprediction; (c, eta) is not realizable here");
  Decision d = substitute(s.game, g, tol);
  return {g, d, s.game.prediction(d)};
}

inline AAState aa_update(AAState s, const std::vector<LossVector>& advice, const Decision& decision, std::size_t omega) {
  check_outcome(s.game, omega);
  if (advice.size() != s.experts()) throw DimensionMismatch("advice length differs from the number of experts");
  s.cumulative_loss += s.game.loss(decision, omega);
  std::vector<double> q(s.experts());
  for (std::size_t t = 0; t < s.experts(); ++t) {
    const ExtReal l = advice[t][omega];
    s.per_expert_loss[t] += l;
    s.log_weights[t] = is_inf(l) ? -kInf : s.log_weights[t] - s.eta * l;
    if (is_inf(s.per_expert_loss[t]) || s.log_prior[t] == -kInf)
      q[t] = -kInf;
    else
      q[t] = s.log_prior[t] + s.eta * (s.cumulative_loss / s.c - s.per_expert_loss[t]);
  }
  s.log_potential = log_sum_exp(q);
  ++s.step_count;
  return s;
}

inline std::pair<Decision, AAState> aa_step(const AAState& s, const std::vector<LossVector>& advice, std::size_t omega,
                                            double tol = 1e-9) {
  auto p = aa_predict(s, advice, tol);
  return {p.decision, aa_update(s, advice, p.decision, omega)};
}

// V(g) = R(g) g with R(g) = min{r in (0, c] : r g in Sigma}.
inline LossVector project_boundary(const Game& game, const LossVector& g, double c, double eta,
                                   double tol = 1e-10) {
  (void)eta;
  constexpr double member_tol = 1e-12;
  LossVector zero(std::vector<ExtReal>(game.m(), 0.0));
  if (is_superprediction(game, zero, member_tol)) return zero;
  if (!is_superprediction(game, g.scaled(c), member_tol)) throw NotRealizable("c * g is not a superprediction");
  double lo = 0, hi = c;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    (is_superprediction(game, g.scaled(mid), member_tol) ? hi : lo) = mid;
  }
  return g.scaled(hi);
}

// Coordinatewise retraction onto the minimal part of Sigma (or of its
// eta-exp-hull when hull_eta is given), coordinates lowered in ascending order.
inline LossVector retraction_F(const Game& game, const LossVector& g, std::optional<double> hull_eta = std::nullopt) {
  // exact membership: near curved endpoints a deficit tolerance t moves the result by O(sqrt(t))
  constexpr double member_tol = 0.0;
  auto member = [&](const LossVector& x) {
    return hull_eta ? is_hull_superprediction(game, x, *hull_eta, member_tol) : is_superprediction(game, x, member_tol);
  };
  std::vector<ExtReal> v = g.values();
  for (std::size_t w = 0; w < v.size(); ++w) {
    auto with = [&](double x) {
      auto t = v;
      t[w] = x;
      return LossVector(t);
    };
    double hi = v[w];
    if (is_inf(hi)) {
      hi = 1.0;
      while (hi < 1e18 && !member(with(hi))) hi *= 2;
      if (!member(with(hi))) continue;
    }
    if (member(with(0.0))) {
      v[w] = 0.0;
      continue;
    }
    double lo = 0;
    while (hi - lo > 1e-14 * std::max(1.0, hi)) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (member(with(mid)) ? hi : lo) = mid;
    }
    v[w] = hi;
  }
  return LossVector(v);
}

}  // namespace pea
