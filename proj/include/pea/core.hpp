#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "numerics.hpp"

namespace pea {

// Loss values live in [0, +inf]; +inf is the IEEE infinity and every place
// that exponentiates a loss goes through exp_neg, where e^{-eta*inf} = 0 is
// fixed explicitly.
using ExtReal = double;

inline double exp_neg(double eta, ExtReal x) { return is_inf(x) ? 0.0 : std::exp(-eta * x); }

// Raised when a realizability precondition turns out false at run time.
struct RealizabilityError : Error {
  using Error::Error;
};
struct SubstitutionFailure : RealizabilityError {
  using RealizabilityError::RealizabilityError;
};
struct DomainError : Error {
  using Error::Error;
};

class OutcomeSpace {
 public:
  explicit OutcomeSpace(std::size_t m) : OutcomeSpace(default_labels(m)) {}
  explicit OutcomeSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) throw InvalidArgument("an outcome space needs at least two outcomes");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      for (std::size_t j = i + 1; j < labels_.size(); ++j)
        if (labels_[i] == labels_[j]) throw InvalidArgument("duplicate outcome label " + labels_[i]);
  }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  static std::vector<std::string> default_labels(std::size_t m) {
    std::vector<std::string> l;
    for (std::size_t i = 0; i < m; ++i) l.push_back(std::to_string(i));
    return l;
  }
  std::vector<std::string> labels_;
};

class Distribution {
 public:
  static constexpr double kSumTol = 1e-12;

  explicit Distribution(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw InvalidArgument("empty distribution");
    double s = 0;
    for (double x : p_) {
      if (!(x >= 0) || !std::isfinite(x)) throw InvalidArgument("distribution entries must be finite and >= 0");
      s += x;
    }
    if (std::abs(s - 1.0) > kSumTol) {
      std::ostringstream os;
      os.precision(17);
      os << "distribution sums to " << s;
      throw InvalidArgument(os.str());
    }
  }
  // Explicit normalization of nonnegative weights (never applied implicitly).
  static Distribution from_weights(std::vector<double> w) {
    double s = 0;
    for (double x : w) {
      if (!(x >= 0) || !std::isfinite(x)) throw InvalidArgument("weights must be finite and >= 0");
      s += x;
    }
    if (!(s > 0)) throw InvalidArgument("weights sum to zero");
    for (double& x : w) x /= s;
    fix_sum(w);
    return Distribution(std::move(w));
  }
  // Projects a numerically drifted probability vector (entries >= -1e-12) back
  // to an exact distribution; for solver outputs only.
  static Distribution clean(std::vector<double> w) {
    for (double& x : w) x = std::max(0.0, x);
    return from_weights(std::move(w));
  }
  static Distribution uniform(std::size_t m) { return Distribution(std::vector<double>(m, 1.0 / static_cast<double>(m))); }
  static Distribution point_mass(std::size_t m, std::size_t i) {
    std::vector<double> p(m, 0.0);
    p.at(i) = 1.0;
    return Distribution(std::move(p));
  }
  static Distribution binary(double p) {
    if (!(p >= 0 && p <= 1)) throw InvalidArgument("binary probability outside [0,1]");
    return Distribution({1.0 - p, p});
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probs() const { return p_; }
  bool interior(double delta) const {
    for (double x : p_)
      if (x < delta) return false;
    return true;
  }

 private:
  static void fix_sum(std::vector<double>& w) {
    // push the rounding residue into the largest entry
    double s = 0;
    for (double x : w) s += x;
    auto it = std::max_element(w.begin(), w.end());
    *it += 1.0 - s;
  }
  std::vector<double> p_;
};

class LossVector {
 public:
  LossVector() = default;
  explicit LossVector(std::vector<ExtReal> v) : v_(std::move(v)) {
    for (double x : v_)
      if (std::isnan(x) || x < 0) throw InvalidArgument("loss entries must lie in [0, +inf]");
  }
  LossVector(std::initializer_list<ExtReal> v) : LossVector(std::vector<ExtReal>(v)) {}

  std::size_t size() const { return v_.size(); }
  ExtReal operator[](std::size_t i) const { return v_[i]; }
  const std::vector<ExtReal>& values() const { return v_; }

  // pointwise comparison, inf <= inf holds; tol is an absolute slack
  bool leq(const LossVector& o, double tol = 0.0) const {
    check_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i)
      if (!(v_[i] <= o.v_[i] + tol) && !(is_inf(o.v_[i]))) return false;
    return true;
  }
  LossVector scaled(double r) const {
    std::vector<ExtReal> w(v_);
    for (double& x : w) x = is_inf(x) ? kInf : r * x;
    return LossVector(std::move(w));
  }
  void check_same(const LossVector& o) const {
    if (o.size() != size()) throw DimensionMismatch("loss vectors of different length");
  }
  bool operator==(const LossVector& o) const { return v_ == o.v_; }

 private:
  std::vector<ExtReal> v_;
};

// sup-norm distance with inf - inf = 0
inline double sup_distance(const LossVector& a, const LossVector& b) {
  a.check_same(b);
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_inf(a[i]) && is_inf(b[i])) continue;
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

using Decision = std::vector<double>;

enum class DomainKind { box, simplex, discrete };

struct Game {
  std::string name;
  OutcomeSpace outcomes{2};
  DomainKind domain = DomainKind::box;
  std::size_t decision_dim = 1;         // box: number of unit intervals; simplex: m - 1
  std::vector<Decision> discrete_points;  // decision set when domain == discrete
  std::function<ExtReal(const Decision&, std::size_t)> loss;
  std::optional<std::pair<double, double>> eta_mixable_range;  // (lo, hi]
  bool mixability_known = true;  // false: range not asserted either way

  // optional closed forms
  std::function<LossVector(const Distribution&)> proper_loss;
  std::function<Decision(const Distribution&)> proper_decision;  // decision realizing proper_loss(pi)
  std::function<Decision(const LossVector&, double tol)> substitution;
  std::function<double(const LossVector&)> deficit;  // see superprediction_deficit
  std::function<double(const LossVector&, double eta)> hull_deficit;

  std::size_t m() const { return outcomes.size(); }

  LossVector prediction(const Decision& d) const {
    std::vector<ExtReal> v(m());
    for (std::size_t w = 0; w < m(); ++w) v[w] = loss(d, w);
    return LossVector(std::move(v));
  }
  bool mixable_at(double eta) const {
    return eta_mixable_range && eta > eta_mixable_range->first && eta <= eta_mixable_range->second * (1 + 1e-12);
  }
  std::size_t decision_size() const { return domain == DomainKind::simplex ? m() : decision_dim; }
};

inline void check_outcome(const Game& g, std::size_t omega) {
  if (omega >= g.m()) throw DimensionMismatch("outcome index out of range");
}

inline ExtReal expected_loss(const Distribution& pi, const LossVector& g) {
  if (pi.size() != g.size()) throw DimensionMismatch("distribution and loss vector differ in length");
  double s = 0;
  for (std::size_t w = 0; w < g.size(); ++w) {
    if (pi[w] == 0) continue;
    if (is_inf(g[w])) return kInf;
    s += pi[w] * g[w];
  }
  return s;
}

inline LossVector exp_mix(const std::vector<LossVector>& points, const std::vector<double>& weights, double eta) {
  if (points.empty()) throw InvalidArgument("exp_mix of an empty point list");
  if (points.size() != weights.size()) throw DimensionMismatch("exp_mix: weights and points differ in length");
  if (!(eta > 0)) throw InvalidArgument("eta must be positive");
  const std::size_t m = points[0].size();
  std::vector<ExtReal> out(m);
  std::vector<double> terms;
  for (std::size_t w = 0; w < m; ++w) {
    terms.clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
      points[i].check_same(points[0]);
      if (weights[i] <= 0 || is_inf(points[i][w])) continue;
      terms.push_back(std::log(weights[i]) - eta * points[i][w]);
    }
    double l = log_sum_exp(terms);
    out[w] = l == -kInf ? kInf : std::max(0.0, -l / eta);
  }
  return LossVector(std::move(out));
}

inline LossVector exp_mix(const std::vector<LossVector>& points, const Distribution& weights, double eta) {
  return exp_mix(points, weights.probs(), eta);
}

struct DeficitResult {
  double value;       // smallest s with g + s*1 a superprediction (finite coordinates)
  Decision decision;  // a decision attaining it
};

namespace detail {

// generic search: min over decisions of max over finite coordinates of loss - g
inline DeficitResult generic_deficit(const Game& game, const LossVector& g) {
  std::vector<std::size_t> fin;
  for (std::size_t w = 0; w < g.size(); ++w)
    if (!is_inf(g[w])) fin.push_back(w);
  auto gap = [&](const Decision& d) {
    double v = -kInf;
    for (std::size_t w : fin) v = std::max(v, game.loss(d, w) - g[w]);
    return v;
  };
  if (fin.empty()) {
    Decision d;
    if (game.domain == DomainKind::simplex) d = Distribution::uniform(game.m()).probs();
    else if (game.domain == DomainKind::discrete) d = game.discrete_points.at(0);
    else d.assign(game.decision_dim, 0.5);
    return {-kInf, d};
  }
  switch (game.domain) {
    case DomainKind::discrete: {
      DeficitResult best{kInf, game.discrete_points.at(0)};
      for (const auto& d : game.discrete_points) {
        double v = gap(d);
        if (v < best.value) best = {v, d};
      }
      return best;
    }
    case DomainKind::simplex: {
      auto r = minimize_max_on_simplex(
          [&](const std::vector<double>& x) {
            std::vector<double> out;
            out.reserve(fin.size());
            for (std::size_t w : fin) out.push_back(game.loss(x, w) - g[w]);
            return out;
          },
          game.m());
      return {r.value, r.x};
    }
    case DomainKind::box: {
      Decision d(game.decision_dim, 0.5);
      double v = gap(d);
      // coordinate-wise scan + golden sweeps; built-in box games are one-dimensional
      for (int sweep = 0; sweep < (game.decision_dim == 1 ? 1 : 20); ++sweep) {
        double before = v;
        for (std::size_t k = 0; k < game.decision_dim; ++k) {
          Decision t = d;
          auto r = scan_golden_min(
              [&](double x) {
                t[k] = x;
                return gap(t);
              },
              0.0, 1.0, 1024, 1e-14);
          if (r.value <= v) {
            d[k] = r.x;
            v = r.value;
          }
        }
        if (before - v < 1e-15) break;
      }
      return {v, d};
    }
  }
  return {kInf, {}};
}

}  // namespace detail

// Smallest uniform shift s such that g + s is a superprediction; g is a
// superprediction iff the deficit is <= 0. Games may supply a closed form.
inline double superprediction_deficit(const Game& game, const LossVector& g) {
  if (g.size() != game.m()) throw DimensionMismatch("loss vector length differs from |Omega|");
  if (game.deficit) return game.deficit(g);
  return detail::generic_deficit(game, g).value;
}

inline bool is_superprediction(const Game& game, const LossVector& g, double tol = 1e-9) {
  bool all_inf = true;
  for (double x : g.values()) all_inf = all_inf && is_inf(x);
  if (all_inf) return true;
  return superprediction_deficit(game, g) <= tol;
}

// A decision whose loss vector minorizes g (within tol per coordinate).
inline Decision substitute(const Game& game, const LossVector& g, double tol = 1e-9) {
  if (g.size() != game.m()) throw DimensionMismatch("loss vector length differs from |Omega|");
  Decision d;
  if (game.substitution) {
    d = game.substitution(g, tol);
  } else {
    auto r = detail::generic_deficit(game, g);
    if (!(r.value <= tol)) throw SubstitutionFailure("not a superprediction (deficit " + std::to_string(r.value) + ")");
    d = r.decision;
  }
  LossVector got = game.prediction(d);
  for (std::size_t w = 0; w < g.size(); ++w)
    if (!(got[w] <= g[w] + tol * std::max(1.0, g[w])) && !is_inf(g[w]))
      throw SubstitutionFailure("substituted prediction exceeds the superprediction at outcome " + std::to_string(w));
  return d;
}

}  // namespace pea
