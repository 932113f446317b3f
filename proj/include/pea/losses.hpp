#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace pea {

struct NonExtendable : Error {
  explicit NonExtendable(std::vector<double> f)
      : Error("proper loss has no continuous extension at a boundary point"), face(std::move(f)) {}
  std::vector<double> face;
};

enum class GameName { log, square, brier, hellinger, kl, absolute, simple };

inline GameName parse_game_name(const std::string& s) {
  static const std::map<std::string, GameName> names{
      {"log", GameName::log},         {"square", GameName::square}, {"brier", GameName::brier},
      {"hellinger", GameName::hellinger}, {"kl", GameName::kl},     {"absolute", GameName::absolute},
      {"simple", GameName::simple}};
  auto it = names.find(s);
  if (it == names.end()) throw InvalidArgument("unknown game " + s);
  return it->second;
}

namespace detail {

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// midpoint of a feasible interval, tolerating a reversal of size tol
inline double interval_midpoint(double lo, double hi, double tol, const char* game) {
  if (lo > hi + tol) throw SubstitutionFailure(std::string("not a superprediction of the ") + game + " game");
  return 0.5 * (lo + hi);
}

// min_p max(l0(p) - g0, l1(p) - g1) for binary box games with l0 increasing,
// l1 decreasing and crossing point `cross`
template <class L0, class L1>
double binary_deficit(const LossVector& g, L0 l0, L1 l1, double cross) {
  if (is_inf(g[0]) && is_inf(g[1])) return -kInf;
  if (is_inf(g[0])) return l1(1.0) - g[1];
  if (is_inf(g[1])) return l0(0.0) - g[0];
  double p = clamp01(cross);
  return std::max(l0(p) - g[0], l1(p) - g[1]);
}

inline Decision simplex_fill(std::vector<double> lower, double tol, const char* game) {
  double s = 0;
  for (double x : lower) s += x;
  if (s > 1 + tol) throw SubstitutionFailure(std::string("not a superprediction of the ") + game + " game");
  const double m = static_cast<double>(lower.size());
  if (s <= 1) {
    for (double& x : lower) x += (1 - s) / m;
  } else {
    for (double& x : lower) x /= s;
  }
  return lower;
}

inline LossVector log_loss_vector(const std::vector<double>& p) {
  std::vector<ExtReal> v(p.size());
  for (std::size_t w = 0; w < p.size(); ++w) v[w] = p[w] > 0 ? -std::log(p[w]) : kInf;
  for (double& x : v) x = std::max(0.0, x);
  return LossVector(std::move(v));
}

inline Game make_log_game(std::size_t m, const char* name) {
  Game g;
  g.name = name;
  g.outcomes = OutcomeSpace(m);
  g.domain = DomainKind::simplex;
  g.decision_dim = m - 1;
  g.loss = [](const Decision& d, std::size_t w) -> ExtReal { return d[w] > 0 ? std::max(0.0, -std::log(d[w])) : kInf; };
  g.eta_mixable_range = std::make_pair(0.0, 1.0);
  g.proper_loss = [](const Distribution& pi) { return log_loss_vector(pi.probs()); };
  g.proper_decision = [](const Distribution& pi) { return pi.probs(); };
  g.deficit = [](const LossVector& v) {
    std::vector<double> t;
    for (double x : v.values())
      if (!is_inf(x)) t.push_back(-x);
    return log_sum_exp(t);
  };
  g.substitution = [](const LossVector& v, double tol) {
    std::vector<double> lower(v.size());
    for (std::size_t w = 0; w < v.size(); ++w) lower[w] = exp_neg(1.0, v[w]);
    return simplex_fill(std::move(lower), tol, "log");
  };
  return g;
}

}  // namespace detail

inline double brier_loss(const std::vector<double>& pi, const std::vector<double>& target) {
  double s = 0;
  for (std::size_t o = 0; o < pi.size(); ++o) s += (target[o] - pi[o]) * (target[o] - pi[o]);
  return s;
}

inline Game builtin_game(GameName name, std::size_t m) {
  if (m < 2) throw InvalidArgument("games need at least two outcomes");
  if ((name == GameName::square || name == GameName::absolute || name == GameName::simple) && m != 2)
    throw InvalidArgument("square, absolute and simple games are binary");
  Game g;
  switch (name) {
    case GameName::log:
      return detail::make_log_game(m, "log");
    case GameName::kl:
      return detail::make_log_game(m, "kl");

    case GameName::square: {
      g.name = "square";
      g.outcomes = OutcomeSpace(2);
      g.decision_dim = 1;
      g.loss = [](const Decision& d, std::size_t w) -> ExtReal { return (d[0] - w) * (d[0] - w); };
      g.eta_mixable_range = std::make_pair(0.0, 2.0);
      g.proper_loss = [](const Distribution& pi) { return LossVector{pi[1] * pi[1], pi[0] * pi[0]}; };
      g.proper_decision = [](const Distribution& pi) { return Decision{pi[1]}; };
      g.deficit = [](const LossVector& v) {
        return detail::binary_deficit(
            v, [](double p) { return p * p; }, [](double p) { return (1 - p) * (1 - p); }, 0.5 * (1 + v[0] - v[1]));
      };
      g.substitution = [](const LossVector& v, double tol) {
        double lo = std::max(0.0, 1 - std::sqrt(v[1])), hi = std::min(1.0, std::sqrt(v[0]));
        return Decision{detail::clamp01(detail::interval_midpoint(lo, hi, tol, "square"))};
      };
      return g;
    }

    case GameName::brier: {
      g.name = "brier";
      g.outcomes = OutcomeSpace(m);
      g.domain = DomainKind::simplex;
      g.decision_dim = m - 1;
      g.loss = [m](const Decision& d, std::size_t w) -> ExtReal {
        double s = 0;
        for (std::size_t o = 0; o < m; ++o) {
          double t = (o == w ? 1.0 : 0.0) - d[o];
          s += t * t;
        }
        return s;
      };
      g.eta_mixable_range = std::make_pair(0.0, 1.0);
      g.proper_loss = [m](const Distribution& pi) {
        std::vector<ExtReal> v(m);
        double sq = 0;
        for (std::size_t o = 0; o < m; ++o) sq += pi[o] * pi[o];
        for (std::size_t w = 0; w < m; ++w) v[w] = std::max(0.0, sq + 1 - 2 * pi[w]);
        return LossVector(std::move(v));
      };
      g.proper_decision = [](const Distribution& pi) { return pi.probs(); };
      return g;
    }

    case GameName::hellinger: {
      g.name = "hellinger";
      g.outcomes = OutcomeSpace(m);
      g.domain = DomainKind::simplex;
      g.decision_dim = m - 1;
      g.loss = [](const Decision& d, std::size_t w) -> ExtReal { return 1 - std::sqrt(std::max(0.0, d[w])); };
      g.mixability_known = false;
      g.proper_loss = [m](const Distribution& pi) {
        double n = 0;
        for (std::size_t o = 0; o < m; ++o) n += pi[o] * pi[o];
        n = std::sqrt(n);
        std::vector<ExtReal> v(m);
        for (std::size_t w = 0; w < m; ++w) v[w] = std::max(0.0, 1 - pi[w] / n);
        return LossVector(std::move(v));
      };
      g.proper_decision = [m](const Distribution& pi) {
        std::vector<double> w(m);
        for (std::size_t o = 0; o < m; ++o) w[o] = pi[o] * pi[o];
        return Distribution::from_weights(w).probs();
      };
      auto lower = [](const LossVector& v, double s) {
        std::vector<double> l(v.size());
        for (std::size_t w = 0; w < v.size(); ++w) {
          double r = is_inf(v[w]) ? 0.0 : std::max(0.0, 1 - v[w] - s);
          l[w] = r * r;
        }
        return l;
      };
      g.deficit = [lower](const LossVector& v) {
        double gmin = kInf, gmax = -kInf;
        for (double x : v.values())
          if (!is_inf(x)) {
            gmin = std::min(gmin, x);
            gmax = std::max(gmax, x);
          }
        if (gmin == kInf) return -kInf;
        double lo = -gmax - 1, hi = 1 - gmin;  // infeasible at lo, feasible at hi
        for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
          double mid = 0.5 * (lo + hi);
          auto l = lower(v, mid);
          double s = 0;
          for (double x : l) s += x;
          (s <= 1 ? hi : lo) = mid;
        }
        return hi;
      };
      g.substitution = [lower](const LossVector& v, double tol) { return detail::simplex_fill(lower(v, 0), tol, "hellinger"); };
      return g;
    }

    case GameName::absolute: {
      g.name = "absolute";
      g.outcomes = OutcomeSpace(2);
      g.decision_dim = 1;
      g.loss = [](const Decision& d, std::size_t w) -> ExtReal { return std::abs(d[0] - static_cast<double>(w)); };
      g.eta_mixable_range = std::nullopt;
      g.deficit = [](const LossVector& v) {
        return detail::binary_deficit(
            v, [](double p) { return p; }, [](double p) { return 1 - p; }, 0.5 * (1 + v[0] - v[1]));
      };
      g.hull_deficit = [](const LossVector& v, double eta) {
        // exp-hull of the segment x + y = 1: e^{-eta x} + e^{-eta y} <= 1 + e^{-eta}
        double s = exp_neg(eta, v[0]) + exp_neg(eta, v[1]);
        if (s == 0) return -kInf;
        return std::log(s / (1 + std::exp(-eta))) / eta;
      };
      g.substitution = [](const LossVector& v, double tol) {
        double lo = std::max(0.0, 1 - v[1]), hi = std::min(1.0, v[0]);
        return Decision{detail::clamp01(detail::interval_midpoint(lo, hi, tol, "absolute"))};
      };
      return g;
    }

    case GameName::simple: {
      // Lambda = {(0,1), (1,0)}: two isolated predictions
      g.name = "simple";
      g.outcomes = OutcomeSpace(2);
      g.domain = DomainKind::discrete;
      g.decision_dim = 1;
      g.discrete_points = {{0.0}, {1.0}};
      g.loss = [](const Decision& d, std::size_t w) -> ExtReal { return d[0] == static_cast<double>(w) ? 0.0 : 1.0; };
      g.eta_mixable_range = std::nullopt;
      g.proper_decision = [](const Distribution& pi) { return Decision{pi[1] >= 0.5 ? 1.0 : 0.0}; };
      g.proper_loss = [](const Distribution& pi) { return pi[1] >= 0.5 ? LossVector{1.0, 0.0} : LossVector{0.0, 1.0}; };
      return g;
    }
  }
  throw InvalidArgument("unsupported game");
}

inline Game builtin_game(const std::string& name, std::size_t m) { return builtin_game(parse_game_name(name), m); }

// Binary log loss with a third outcome that always costs 1:
// Lambda = {(-ln p, -ln(1 - p), 1)}. Its proper loss has no continuous
// extension to (0, 0, 1).
inline Game log_with_dummy_game() {
  Game g;
  g.name = "log-with-dummy";
  g.outcomes = OutcomeSpace(3);
  g.decision_dim = 1;
  g.loss = [](const Decision& d, std::size_t w) -> ExtReal {
    const double p = d[0];
    if (w == 2) return 1.0;
    const double q = w == 0 ? p : 1 - p;
    return q > 0 ? std::max(0.0, -std::log(q)) : kInf;
  };
  g.eta_mixable_range = std::make_pair(0.0, 1.0);
  return g;
}

inline double realizability_constant(GameName name, double eta) {
  if (name != GameName::absolute) throw InvalidArgument("closed-form realizability constant only for the absolute game");
  if (!(eta > 0)) throw InvalidArgument("eta must be positive");
  // ln(2 / (1 + e^{-eta})) = ln(1 + tanh(eta/2)), stable as eta -> 0
  return eta / (2 * std::log1p(std::tanh(eta / 2)));
}

// Proper loss of the eta-exp-hull of the absolute game, in closed form.
inline LossVector absolute_hull_loss(const Distribution& pi, double eta) {
  const double e = std::exp(-eta);
  double u = std::min(1.0, std::max(e, pi[0] * (1 + e)));
  double v = 1 + e - u;
  return LossVector{std::max(0.0, -std::log(u) / eta), std::max(0.0, -std::log(v) / eta)};
}

// Deficit with respect to the eta-exp-hull of the superprediction set.
inline double hull_deficit(const Game& game, const LossVector& g, double eta) {
  if (game.hull_deficit) return game.hull_deficit(g, eta);
  if (game.mixable_at(eta) || !game.mixability_known) return superprediction_deficit(game, g);
  throw InvalidArgument("no hull membership available for game " + game.name + " at this eta");
}

inline bool is_hull_superprediction(const Game& game, const LossVector& g, double eta, double tol = 1e-9) {
  bool all_inf = true;
  for (double x : g.values()) all_inf = all_inf && is_inf(x);
  return all_inf || hull_deficit(game, g, eta) <= tol;
}

// ---------------------------------------------------------------- entropy

enum class EntropyRoute { decision_domain, mixability_unverified, sampled_hull };

struct EntropyResult {
  double value;
  EntropyRoute route;
  std::size_t samples = 0;  // exp-mixtures examined on the sampled route
  Decision argmin;          // minimizing decision (decision-domain routes)
};

namespace detail {

template <class F>
std::pair<Decision, double> minimize_over_decisions(const Game& game, F&& f) {
  switch (game.domain) {
    case DomainKind::simplex: {
      auto r = minimize_on_simplex(f, game.m());
      return {r.x, r.value};
    }
    case DomainKind::discrete: {
      std::pair<Decision, double> best{game.discrete_points.at(0), kInf};
      for (const auto& d : game.discrete_points) {
        double v = f(d);
        if (v < best.second) best = {d, v};
      }
      return best;
    }
    case DomainKind::box: {
      Decision d(game.decision_dim, 0.5);
      double v = f(d);
      for (int sweep = 0; sweep < (game.decision_dim == 1 ? 1 : 30); ++sweep) {
        double before = v;
        for (std::size_t k = 0; k < game.decision_dim; ++k) {
          Decision t = d;
          auto r = scan_golden_min(
              [&](double x) {
                t[k] = x;
                return f(t);
              },
              0.0, 1.0, 1024, 1e-14);
          if (r.value <= v) {
            d[k] = r.x;
            v = r.value;
          }
        }
        if (before - v < 1e-16) break;
      }
      return {d, v};
    }
  }
  return {{}, kInf};
}

inline Decision random_decision(const Game& game, Rng& rng) {
  switch (game.domain) {
    case DomainKind::simplex:
      return Distribution::from_weights(rng.dirichlet(game.m())).probs();
    case DomainKind::discrete:
      return game.discrete_points[rng.below(game.discrete_points.size())];
    case DomainKind::box: {
      Decision d(game.decision_dim);
      for (auto& x : d) x = rng.uniform();
      return d;
    }
  }
  return {};
}

inline double hull_entropy(const Game& game, const Distribution& pi, double eta, std::size_t samples,
                           std::size_t* used) {
  auto value = [&](const std::vector<Decision>& ds, const std::vector<double>& w) {
    std::vector<LossVector> pts;
    for (const auto& d : ds) pts.push_back(game.prediction(d));
    return expected_loss(pi, exp_mix(pts, w, eta));
  };
  double best = kInf;
  std::size_t n = 0;
  if (game.m() == 2 && game.domain == DomainKind::box && game.decision_dim == 1) {
    // in two dimensions every minimal point of the hull mixes at most two
    // predictions, so pairs are exhaustive
    const int G = 32;
    double bp = 0, bq = 1, ba = 0.5;
    for (int i = 0; i <= G; ++i)
      for (int j = i; j <= G; ++j) {
        double p = static_cast<double>(i) / G, q = static_cast<double>(j) / G;
        auto r = golden_min([&](double a) { return value({{p}, {q}}, {1 - a, a}); }, 0.0, 1.0, 1e-12);
        ++n;
        if (r.value < best) {
          best = r.value;
          bp = p;
          bq = q;
          ba = r.x;
        }
      }
    for (int sweep = 0; sweep < 20; ++sweep) {
      double before = best;
      auto rp = golden_min([&](double x) { return value({{x}, {bq}}, {1 - ba, ba}); }, std::max(0.0, bp - 0.05), std::min(1.0, bp + 0.05), 1e-14);
      if (rp.value < best) best = rp.value, bp = rp.x;
      auto rq = golden_min([&](double x) { return value({{bp}, {x}}, {1 - ba, ba}); }, std::max(0.0, bq - 0.05), std::min(1.0, bq + 0.05), 1e-14);
      if (rq.value < best) best = rq.value, bq = rq.x;
      auto ra = golden_min([&](double a) { return value({{bp}, {bq}}, {1 - a, a}); }, 0.0, 1.0, 1e-14);
      if (ra.value < best) best = ra.value, ba = ra.x;
      n += 3;
      if (before - best < 1e-16) break;
    }
  } else {
    Rng rng(0x5eed);
    for (std::size_t s = 0; s < samples; ++s) {
      std::size_t k = 2 + rng.below(game.m());
      std::vector<Decision> ds;
      for (std::size_t i = 0; i < k; ++i) ds.push_back(random_decision(game, rng));
      best = std::min(best, value(ds, rng.dirichlet(k)));
      ++n;
    }
  }
  if (used) *used = n;
  return best;
}

}  // namespace detail

inline EntropyResult generalized_entropy(const Game& game, const Distribution& pi, double eta,
                                         std::size_t samples = 4000) {
  if (!(eta > 0)) throw InvalidArgument("eta must be positive");
  if (pi.size() != game.m()) throw DimensionMismatch("distribution length differs from |Omega|");
  if (game.mixable_at(eta) || !game.mixability_known) {
    auto [d, v] = detail::minimize_over_decisions(game, [&](const Decision& x) { return expected_loss(pi, game.prediction(x)); });
    return {std::max(0.0, v), game.mixability_known ? EntropyRoute::decision_domain : EntropyRoute::mixability_unverified, 0, d};
  }
  std::size_t used = 0;
  double v = detail::hull_entropy(game, pi, eta, samples, &used);
  return {std::max(0.0, v), EntropyRoute::sampled_hull, used, {}};
}

// Homogeneous degree-one extension of H to the positive orthant.
inline double entropy_extension(const Game& game, const std::vector<double>& x, double eta) {
  double s = 0;
  for (double v : x) s += v;
  if (!(s > 0)) return 0.0;
  std::vector<double> p(x);
  for (double& v : p) v /= s;
  return s * generalized_entropy(game, Distribution::clean(p), eta).value;
}

// ---------------------------------------------------------------- proper losses

enum class LossDomain { whole_simplex, interior_only };

struct ProperLoss {
  Game game;
  double eta = 1.0;
  std::function<LossVector(const Distribution&)> eval;
  std::function<Decision(const Distribution&)> decision;  // optional: decision whose prediction is eval(pi)
  LossDomain domain = LossDomain::whole_simplex;
  bool assumption3 = true;
  std::string origin;

  LossVector operator()(const Distribution& pi) const {
    if (domain == LossDomain::interior_only && !pi.interior(1e-300))
      throw DomainError("proper loss is defined on the interior only");
    return eval(pi);
  }
};

inline ProperLoss canonical_proper_loss(const Game& game, double eta) {
  if (!game.proper_loss) throw InvalidArgument("game " + game.name + " has no closed-form proper loss");
  ProperLoss l;
  l.game = game;
  l.eta = eta;
  l.eval = game.proper_loss;
  l.decision = game.proper_decision;
  l.origin = "closed-form";
  return l;
}

// lambda^H(pi, w) = 1/2 sum_o (sqrt(delta_w(o)) - sqrt(pi(o)))^2, not proper
inline ProperLoss raw_hellinger_loss(std::size_t m) {
  ProperLoss l;
  l.game = builtin_game(GameName::hellinger, m);
  l.eval = [m](const Distribution& pi) {
    std::vector<ExtReal> v(m);
    for (std::size_t w = 0; w < m; ++w) {
      double s = 0;
      for (std::size_t o = 0; o < m; ++o) {
        double t = (o == w ? 1.0 : 0.0) - std::sqrt(pi[o]);
        s += t * t;
      }
      v[w] = 0.5 * s;
    }
    return LossVector(std::move(v));
  };
  l.origin = "raw-hellinger";
  return l;
}

struct SavageOptions {
  double fd_step = 1e-6;
  bool allow_interior_only = false;  // return an interior-only loss instead of throwing NonExtendable
  double path_tolerance = 1e-3;
};

namespace detail {

// Savage representation lambda_w = phi - sum_o pi_o phi'_o + phi'_w with
// central differences on the homogeneous extension.
inline LossVector savage_interior(const Game& game, double eta, const std::vector<double>& pi, double h0) {
  const std::size_t m = pi.size();
  auto phi = [&](const std::vector<double>& x) { return entropy_extension(game, x, eta); };
  const double f = phi(pi);
  std::vector<double> d(m);
  for (std::size_t o = 0; o < m; ++o) {
    double h = std::min(h0, 0.5 * pi[o]);
    auto xp = pi, xm = pi;
    xp[o] += h;
    xm[o] -= h;
    d[o] = (phi(xp) - phi(xm)) / (2 * h);
  }
  double dot = 0;
  for (std::size_t o = 0; o < m; ++o) dot += pi[o] * d[o];
  std::vector<ExtReal> v(m);
  for (std::size_t w = 0; w < m; ++w) v[w] = std::max(0.0, f - dot + d[w]);
  return LossVector(std::move(v));
}

// Limit of exp(-lambda) at a boundary point along (1-t) pi + t v for
// t = 1e-3, 1e-4, 1e-5, with two rounds of Richardson extrapolation
// (error assumed to expand in powers of t).
inline std::vector<double> boundary_limit_chart(const Game& game, double eta, const std::vector<double>& pi,
                                                const std::vector<double>& v, double h0) {
  const std::size_t m = pi.size();
  std::vector<std::vector<double>> u;
  for (double t : {1e-3, 1e-4, 1e-5}) {
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = (1 - t) * pi[i] + t * v[i];
    auto l = savage_interior(game, eta, x, h0);
    std::vector<double> e(m);
    for (std::size_t i = 0; i < m; ++i) e[i] = exp_neg(1.0, l[i]);
    u.push_back(e);
  }
  std::vector<double> lim(m);
  for (std::size_t i = 0; i < m; ++i) {
    double r1 = (10 * u[1][i] - u[0][i]) / 9, r2 = (10 * u[2][i] - u[1][i]) / 9;
    lim[i] = std::min(1.0, std::max(0.0, (100 * r2 - r1) / 99));
  }
  return lim;
}

inline std::vector<double> skewed_interior(std::size_t m) {
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = static_cast<double>(i + 1);
  return Distribution::from_weights(v).probs();
}

inline LossVector from_chart(const std::vector<double>& u) {
  std::vector<ExtReal> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] > 0 ? std::max(0.0, -std::log(u[i])) : kInf;
  return LossVector(std::move(v));
}

// Whether E_pi over the prediction set has a unique minimizer (checked on a
// decision grid, in the exp(-g) chart).
inline bool unique_minimizer(const Game& game, const Distribution& pi) {
  std::vector<std::pair<double, LossVector>> vals;
  auto visit = [&](const Decision& d) {
    auto g = game.prediction(d);
    vals.emplace_back(expected_loss(pi, g), g);
  };
  if (game.domain == DomainKind::simplex) {
    int G = std::max(8, grid_subdivisions(game.m(), 3000));
    std::vector<double> x(game.m());
    for_each_composition(G, game.m(), [&](const std::vector<int>& c) {
      for (std::size_t i = 0; i < c.size(); ++i) x[i] = static_cast<double>(c[i]) / G;
      visit(x);
    });
  } else if (game.domain == DomainKind::discrete) {
    for (const auto& d : game.discrete_points) visit(d);
  } else if (game.decision_dim == 1) {
    for (int i = 0; i <= 1024; ++i) visit(Decision{i / 1024.0});
  } else {
    return true;  // not checked for multi-dimensional boxes
  }
  double best = kInf;
  for (auto& [e, g] : vals) best = std::min(best, e);
  std::vector<double> lo(game.m(), kInf), hi(game.m(), -kInf);
  for (auto& [e, g] : vals) {
    if (e > best + 1e-9 * std::max(1.0, std::abs(best))) continue;
    for (std::size_t w = 0; w < game.m(); ++w) {
      double u = exp_neg(1.0, g[w]);
      lo[w] = std::min(lo[w], u);
      hi[w] = std::max(hi[w], u);
    }
  }
  for (std::size_t w = 0; w < game.m(); ++w)
    if (hi[w] - lo[w] > 1e-3) return false;
  return true;
}

// representative point (uniform on the support) of every proper face
inline std::vector<std::vector<double>> face_points(std::size_t m) {
  std::vector<std::vector<double>> out;
  if (m > 12) return out;
  for (unsigned mask = 1; mask + 1 < (1u << m); ++mask) {
    std::vector<double> x(m, 0.0);
    int k = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) ++k;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) x[i] = 1.0 / k;
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

inline ProperLoss proper_loss_from_entropy(const Game& game, double eta, const SavageOptions& opt = {}) {
  if (!(eta > 0)) throw InvalidArgument("eta must be positive");
  const std::size_t m = game.m();
  ProperLoss l;
  l.game = game;
  l.eta = eta;
  l.origin = "savage";

  const auto uniform = Distribution::uniform(m).probs();
  const auto skew = detail::skewed_interior(m);
  bool extendable = true;
  std::vector<double> bad_face;
  for (const auto& face : detail::face_points(m)) {
    auto a = detail::boundary_limit_chart(game, eta, face, uniform, opt.fd_step);
    auto b = detail::boundary_limit_chart(game, eta, face, skew, opt.fd_step);
    for (std::size_t i = 0; i < m; ++i)
      if (std::abs(a[i] - b[i]) > opt.path_tolerance) extendable = false;
    if (!extendable) {
      bad_face = face;
      break;
    }
  }
  for (const auto& face : detail::face_points(m)) {
    int zeros = 0;
    for (double x : face) zeros += x == 0;
    if (zeros >= 2 && !detail::unique_minimizer(game, Distribution(face))) l.assumption3 = false;
  }
  if (!extendable) {
    if (!opt.allow_interior_only) throw NonExtendable(bad_face);
    l.domain = LossDomain::interior_only;
  }
  const double h0 = opt.fd_step;
  const bool whole = extendable;
  l.eval = [game, eta, h0, whole, uniform](const Distribution& pi) {
    double mn = *std::min_element(pi.probs().begin(), pi.probs().end());
    if (mn >= 1e-7) return detail::savage_interior(game, eta, pi.probs(), h0);
    if (!whole) throw DomainError("proper loss is defined on the interior only");
    return detail::from_chart(detail::boundary_limit_chart(game, eta, pi.probs(), uniform, h0));
  };
  return l;
}

// ---------------------------------------------------------------- checkers

struct ProperReport {
  double max_violation = 0;
  bool strictness = true;
  std::vector<double> witness_pi, witness_other;
};

inline std::vector<std::vector<double>> simplex_grid(std::size_t m, int points_per_axis) {
  std::vector<std::vector<double>> out;
  const int G = points_per_axis - 1;
  std::vector<double> x(m);
  for_each_composition(G, m, [&](const std::vector<int>& c) {
    for (std::size_t i = 0; i < m; ++i) x[i] = static_cast<double>(c[i]) / G;
    out.push_back(Distribution::clean(x).probs());
  });
  return out;
}

inline ProperReport check_proper(const ProperLoss& lambda, int grid_density) {
  if (grid_density < 2) throw InvalidArgument("grid_density must be at least 2");
  const auto grid = simplex_grid(lambda.game.m(), grid_density);
  std::vector<LossVector> vals;
  std::vector<bool> usable;
  for (const auto& p : grid) {
    try {
      vals.push_back(lambda(Distribution(p)));
      usable.push_back(true);
    } catch (const DomainError&) {
      vals.emplace_back();
      usable.push_back(false);
    }
  }
  ProperReport rep;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!usable[i]) continue;
    Distribution pi(grid[i]);
    double own = expected_loss(pi, vals[i]);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (i == j || !usable[j]) continue;
      double other = expected_loss(pi, vals[j]);
      if (is_inf(own)) continue;
      double excess = own - other;
      if (excess > rep.max_violation) {
        rep.max_violation = excess;
        rep.witness_pi = grid[i];
        rep.witness_other = grid[j];
      }
      if (!(other - own > 1e-12)) rep.strictness = false;
    }
  }
  return rep;
}

struct MixabilityReport {
  bool mixable;
  double worst_gap;
};

inline MixabilityReport check_mixability(const Game& game, double eta, int samples, double tol = 1e-9,
                                         std::uint64_t seed = 1) {
  if (samples < 1) throw InvalidArgument("samples must be >= 1");
  Rng rng(seed);
  double worst = -kInf;
  for (int s = 0; s < samples; ++s) {
    std::size_t k = 2 + rng.below(4);
    std::vector<LossVector> pts;
    for (std::size_t i = 0; i < k; ++i) pts.push_back(game.prediction(detail::random_decision(game, rng)));
    auto w = Distribution::from_weights(rng.dirichlet(k));
    worst = std::max(worst, superprediction_deficit(game, exp_mix(pts, w, eta)));
  }
  return {worst <= tol, worst};
}

}  // namespace pea
