#pragma once

#include <cmath>
#include <tuple>
#include <vector>

#include "aggregating.hpp"
#include "core.hpp"
#include "losses.hpp"
#include "rng.hpp"

namespace pea {

struct ContractViolation : RealizabilityError {
  ContractViolation(const std::string& what, double p, double max_q)
      : RealizabilityError(what), best_p(p), best_max_q(max_q) {}
  double best_p;
  double best_max_q;
};

struct SlackExceeded : Error {
  SlackExceeded(std::vector<double> pi, double max_q)
      : Error("simplex solver stalled above (1+epsilon) C + tol"), best(std::move(pi)), best_max_q(max_q) {}
  std::vector<double> best;
  double best_max_q;
};

// ln q_g(pi, w) for lambda(pi, w) = lam and g(w) = g
inline double log_q_value(double lam, double c, double eta, double g) {
  if (is_inf(g)) return -kInf;
  if (is_inf(lam)) return kInf;
  return eta * (lam / c - g);
}

inline double q_value(double lam, double c, double eta, double g) {
  double l = log_q_value(lam, c, eta, g);
  return l == -kInf ? 0.0 : std::exp(l);
}

inline double q_term(const ProperLoss& proper, double c, double eta, const LossVector& g, const Distribution& pi,
                     std::size_t omega) {
  LossVector lam = proper(pi);
  if (omega >= lam.size() || g.size() != lam.size()) throw DimensionMismatch("q_term: dimension mismatch");
  return q_value(lam[omega], c, eta, g[omega]);
}

struct Supermartingale {
  ProperLoss proper;
  double c = 1.0;
  double eta = 1.0;
  std::vector<double> log_prior;
  std::vector<double> log_weights;  // ln P0(theta) + sum of realized ln q terms
  double log_value = 0;             // ln Q^{P0}
  std::size_t step_count = 0;
  ExtReal cumulative_loss = 0;
  std::vector<ExtReal> per_expert_loss;
  double cumulative_log_slack = 0;  // sum ln(1 + slack_n)
  double max_log_increase = -kInf;  // largest per-step increase of log_value

  const Game& game() const { return proper.game; }
  std::size_t experts() const { return log_prior.size(); }
};

inline Supermartingale dfa_init(ProperLoss proper, double c, double eta, const Distribution& prior) {
  if (!(c >= 1)) throw InvalidArgument("c must be >= 1");
  if (!(eta > 0)) throw InvalidArgument("eta must be positive");
  Supermartingale s;
  s.proper = std::move(proper);
  s.c = c;
  s.eta = eta;
  s.log_prior = log_of(prior);
  s.log_weights = s.log_prior;
  s.log_value = log_sum_exp(s.log_weights);
  s.per_expert_loss.assign(prior.size(), 0.0);
  return s;
}

// The lambda used by default: the closed form where the game has one and is
// mixable (or of unknown mixability) at eta; for the absolute game the
// composition V(lambda^eta) onto the boundary of the superprediction set;
// otherwise the same composition over the Savage-derived hull loss.
inline ProperLoss default_proper_loss(const Game& game, double c, double eta) {
  if (game.proper_loss && (game.mixable_at(eta) || !game.mixability_known || game.domain == DomainKind::discrete))
    return canonical_proper_loss(game, eta);
  std::function<LossVector(const Distribution&)> hull;
  if (game.name == "absolute") {
    hull = [eta](const Distribution& pi) { return absolute_hull_loss(pi, eta); };
  } else {
    auto derived = proper_loss_from_entropy(game, eta);
    hull = derived.eval;
  }
  ProperLoss l;
  l.game = game;
  l.eta = eta;
  l.origin = "boundary-projection";
  l.eval = [game, hull, c, eta](const Distribution& pi) { return project_boundary(game, hull(pi), c, eta); };
  return l;
}

struct SupermartingaleReport {
  double max_excess = -kInf;
  std::vector<double> witness_pi;
  Decision witness_decision;
};

inline SupermartingaleReport supermartingale_property_check(const ProperLoss& proper, double c, double eta,
                                                            const Game& game, int samples, std::uint64_t seed = 1) {
  if (samples < 1) throw InvalidArgument("samples must be >= 1");
  SupermartingaleReport rep;
  auto probe = [&](const Distribution& pi, const Decision& d) {
    LossVector lam = proper(pi), g = game.prediction(d);
    double e = 0;
    for (std::size_t w = 0; w < pi.size(); ++w)
      if (pi[w] > 0) e += pi[w] * q_value(lam[w], c, eta, g[w]);
    if (e - 1 > rep.max_excess) {
      rep.max_excess = e - 1;
      rep.witness_pi = pi.probs();
      rep.witness_decision = d;
    }
  };
  auto binary_decision = [&](double p) -> Decision {
    if (game.domain == DomainKind::simplex) return {1 - p, p};
    return {p};
  };
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    Distribution pi = Distribution::from_weights(rng.dirichlet(game.m()));
    probe(pi, detail::random_decision(game, rng));
  }
  if (game.m() == 2 && game.domain != DomainKind::discrete) {
    const int G = 200;
    for (int i = 0; i <= G; ++i)
      for (int j = 0; j <= G; ++j) probe(Distribution::binary(static_cast<double>(i) / G), binary_decision(static_cast<double>(j) / G));
  }
  return rep;
}

// ---------------------------------------------------------------- solvers

struct BinarySolution {
  double p;
  double max_q;
  double slack;
};

template <class Q>
BinarySolution dfa_solve_binary(Q&& q, double C, double tol) {
  auto finish = [&](double p) {
    double mq = std::max(q(p, 0), q(p, 1));
    return BinarySolution{p, mq, std::max(0.0, mq - C)};
  };
  if (q(0.0, 1) <= C) return finish(0.0);
  if (q(1.0, 0) <= C) return finish(1.0);
  auto h = [&](double p) { return q(p, 1) - q(p, 0); };
  double h0 = h(0.0), h1 = h(1.0);
  if (!(h0 > 0) || !(h1 < 0))
    throw ContractViolation("endpoint signs of q(p,1) - q(p,0) are inconsistent with the expectation bound", 0.5,
                            std::max(q(0.5, 0), q(0.5, 1)));
  double lo = 0, hi = 1, p = 0.5;
  for (int it = 0; it < 2000; ++it) {
    p = 0.5 * (lo + hi);
    if (p <= lo || p >= hi) break;
    double hp = h(p);
    if (std::abs(hp) <= tol) break;
    (hp > 0 ? lo : hi) = p;
  }
  auto sol = finish(p);
  if (!(sol.max_q <= C * (1 + 1e-9) + tol))
    throw ContractViolation("no p keeps both q(p,0) and q(p,1) below C", p, sol.max_q);
  return sol;
}

// {p : q(p,0) <= C and q(p,1) <= C}, assuming q(., 1) non-increasing and
// q(., 0) non-decreasing in p (true for proper binary losses).
template <class Q>
std::pair<double, double> dfa_admissible_interval(Q&& q, double C) {
  auto lowest = [&](auto&& ok) {  // smallest p with ok(p), ok monotone false -> true
    if (ok(0.0)) return 0.0;
    double lo = 0, hi = 1;
    while (true) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (ok(mid) ? hi : lo) = mid;
    }
    return hi;
  };
  double a = lowest([&](double p) { return q(p, 1) <= C; });
  double b = 1.0 - lowest([&](double r) { return q(1.0 - r, 0) <= C; });
  return {a, b};
}

template <class Q>
BinarySolution dfa_solve_binary_midpoint(Q&& q, double C, double tol) {
  auto [a, b] = dfa_admissible_interval(q, C);
  double p = a <= b ? 0.5 * (a + b) : 0.5 * (a + b);
  double mq = std::max(q(p, 0), q(p, 1));
  if (!(mq <= C * (1 + 1e-9) + tol)) throw ContractViolation("empty admissible interval", p, mq);
  return {p, mq, std::max(0.0, mq - C)};
}

struct SimplexSolution {
  Distribution pi;
  double max_q;
  double slack;
  double delta;
};

inline double simplex_delta(double epsilon, std::size_t m) {
  return epsilon / ((1 + epsilon) * static_cast<double>(m - 1));
}

// qvec(pi) returns (q(pi, w))_w
template <class QVec>
SimplexSolution dfa_solve_simplex_vec(QVec&& qvec, double C, std::size_t m, double epsilon, double tol) {
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  const double delta = simplex_delta(epsilon, m);
  SimplexMinOptions opt;
  opt.delta = delta;
  auto f = [&](const std::vector<double>& x) { return qvec(Distribution::clean(x)); };
  // the barycenter is accepted as is when it already meets C; otherwise the
  // max is minimized outright, so the answer does not depend on C
  const Distribution bary = Distribution::uniform(m);
  const double at_bary = detail::vmax(f(bary.probs()));
  if (at_bary <= C) return {bary, at_bary, 0.0, delta};
  auto r = minimize_max_on_simplex(f, m, opt);
  if (!(r.value <= (1 + epsilon) * C + tol)) throw SlackExceeded(r.x, r.value);
  return {Distribution::clean(r.x), r.value, std::max(0.0, r.value - C), delta};
}

template <class Q>
SimplexSolution dfa_solve_simplex(Q&& qfun, double C, std::size_t m, double epsilon = 1e-6, double tol = 1e-9) {
  return dfa_solve_simplex_vec(
      [&](const Distribution& pi) {
        std::vector<double> v(m);
        for (std::size_t w = 0; w < m; ++w) v[w] = qfun(pi, w);
        return v;
      },
      C, m, epsilon, tol);
}

// ---------------------------------------------------------------- protocol

enum class BinarySelection { fixed_point, admissible_midpoint };

struct DfaOptions {
  BinarySelection selection = BinarySelection::fixed_point;
  double epsilon = 1e-6;
  double tol = 1e-12;
  bool force_simplex = false;
  bool record_violations = false;  // keep going with the best candidate instead of throwing
};

struct DfaPrediction {
  Distribution pi = Distribution::uniform(2);
  LossVector lambda;
  Decision decision;
  LossVector prediction;
  double slack = 0;
  bool violated = false;
};

namespace detail {

// Solves for pi given the per-outcome q vector as a function of pi (C = 1).
template <class QVec>
DfaPrediction dfa_solve(const Game& game, const ProperLoss& proper, QVec&& qvec, const DfaOptions& opt) {
  const std::size_t m = game.m();
  DfaPrediction out;
  if (m == 2 && !opt.force_simplex) {
    double last_p = -1;
    std::vector<double> last;
    auto q = [&](double p, std::size_t w) {
      if (p != last_p) {
        last = qvec(Distribution::binary(p));
        last_p = p;
      }
      return last[w];
    };
    BinarySolution sol{};
    try {
      sol = opt.selection == BinarySelection::fixed_point ? dfa_solve_binary(q, 1.0, opt.tol)
                                                          : dfa_solve_binary_midpoint(q, 1.0, opt.tol);
    } catch (const ContractViolation& e) {
      if (!opt.record_violations) throw;
      sol = {e.best_p, e.best_max_q, std::max(0.0, e.best_max_q - 1.0)};
      out.violated = true;
    }
    out.pi = Distribution::binary(sol.p);
    out.slack = sol.slack;
  } else {
    try {
      auto sol = dfa_solve_simplex_vec(qvec, 1.0, m, opt.epsilon, opt.tol);
      out.pi = sol.pi;
      out.slack = sol.slack;
    } catch (const SlackExceeded& e) {
      if (!opt.record_violations) throw;
      out.pi = Distribution::clean(e.best);
      out.slack = std::max(0.0, e.best_max_q - 1.0);
      out.violated = true;
    }
  }
  out.lambda = proper(out.pi);
  out.decision = proper.decision ? proper.decision(out.pi) : substitute(game, out.lambda);
  out.prediction = game.prediction(out.decision);
  return out;
}

// Once every expert has infinite loss Q^{P0} is 0 and any forecast keeps it
// there; the prior weights are used so the forecast stays well defined.
inline std::vector<double> normalized_weights(const std::vector<double>& logw, double log_value,
                                              const std::vector<double>& log_prior) {
  if (log_value == -kInf) return normalized_weights(log_prior, log_sum_exp(log_prior), log_prior);
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = logw[i] == -kInf ? 0.0 : std::exp(logw[i] - log_value);
  return w;
}

}  // namespace detail

inline DfaPrediction dfa_predict(const Supermartingale& s, const std::vector<LossVector>& advice,
                                 const DfaOptions& opt = {}) {
  if (advice.size() != s.experts()) throw DimensionMismatch("advice length differs from the number of experts");
  const auto w = detail::normalized_weights(s.log_weights, s.log_value, s.log_prior);
  const std::size_t m = s.game().m();
  auto qvec = [&](const Distribution& pi) {
    LossVector lam = s.proper(pi);
    std::vector<double> out(m, 0.0);
    for (std::size_t t = 0; t < advice.size(); ++t) {
      if (w[t] == 0) continue;
      for (std::size_t o = 0; o < m; ++o) out[o] += w[t] * q_value(lam[o], s.c, s.eta, advice[t][o]);
    }
    return out;
  };
  return detail::dfa_solve(s.game(), s.proper, qvec, opt);
}

inline Supermartingale dfa_update(Supermartingale s, const std::vector<LossVector>& advice, const DfaPrediction& pred,
                                  std::size_t omega) {
  check_outcome(s.game(), omega);
  if (advice.size() != s.experts()) throw DimensionMismatch("advice length differs from the number of experts");
  const double before = s.log_value;
  s.cumulative_loss += s.game().loss(pred.decision, omega);
  for (std::size_t t = 0; t < s.experts(); ++t) {
    s.per_expert_loss[t] += advice[t][omega];
    if (s.log_weights[t] != -kInf) s.log_weights[t] += log_q_value(pred.lambda[omega], s.c, s.eta, advice[t][omega]);
  }
  s.log_value = log_sum_exp(s.log_weights);
  s.cumulative_log_slack += std::log1p(pred.slack);
  s.max_log_increase = std::max(s.max_log_increase, s.log_value - before);
  ++s.step_count;
  return s;
}

inline std::tuple<Decision, Supermartingale, double> dfa_step(const Supermartingale& s,
                                                              const std::vector<LossVector>& advice, std::size_t omega,
                                                              const DfaOptions& opt = {}) {
  auto pred = dfa_predict(s, advice, opt);
  return {pred.decision, dfa_update(s, advice, pred, omega), pred.slack};
}

}  // namespace pea
