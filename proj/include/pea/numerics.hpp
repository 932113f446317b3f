#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pea {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidArgument : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};

inline bool is_inf(double x) { return x == kInf; }

// ln(sum exp(v_i)); -inf entries contribute nothing.
inline double log_sum_exp(std::span<const double> v) {
  double hi = -kInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == -kInf) return -kInf;
  if (hi == kInf) return kInf;
  double s = 0.0;
  for (double x : v)
    if (x != -kInf) s += std::exp(x - hi);
  return hi + std::log(s);
}

struct ScalarMin {
  double x;
  double value;
};

// Golden-section search on [a, b]; f need only be unimodal there.
template <class F>
ScalarMin golden_min(F&& f, double a, double b, double xtol = 1e-13, int max_iter = 200) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  ScalarMin best = fc <= fd ? ScalarMin{c, fc} : ScalarMin{d, fd};
  // endpoints matter when the minimum sits on the boundary
  double fa = f(a), fb = f(b);
  if (fa < best.value) best = {a, fa};
  if (fb < best.value) best = {b, fb};
  return best;
}

// Uniform scan followed by golden refinement around the best cell; tolerates
// non-unimodal f at the scan resolution.
template <class F>
ScalarMin scan_golden_min(F&& f, double a, double b, int scan = 1024, double xtol = 1e-13) {
  int best_i = 0;
  double best_v = kInf;
  for (int i = 0; i <= scan; ++i) {
    double x = a + (b - a) * i / scan;
    double v = f(x);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  if (best_v == kInf) return {a + (b - a) * best_i / scan, kInf};
  double lo = a + (b - a) * std::max(0, best_i - 1) / scan;
  double hi = a + (b - a) * std::min(scan, best_i + 1) / scan;
  ScalarMin r = golden_min(f, lo, hi, xtol);
  if (best_v < r.value) return {a + (b - a) * best_i / scan, best_v};
  return r;
}

// All compositions of `total` into `parts` nonnegative integers, lexicographic
// order on (i_0, ..., i_{parts-1}); the first is (0, ..., 0, total).
template <class Visit>
void for_each_composition(int total, std::size_t parts, Visit&& visit) {
  std::vector<int> c(parts, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t k, int left) {
    if (k + 1 == parts) {
      c[k] = left;
      visit(static_cast<const std::vector<int>&>(c));
      return;
    }
    for (int i = 0; i <= left; ++i) {
      c[k] = i;
      rec(k + 1, left - i);
    }
  };
  rec(0, total);
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Largest subdivision count whose barycentric grid stays under `budget` points.
inline int grid_subdivisions(std::size_t m, double budget) {
  if (m == 2) return 1024;
  int g = 2;
  while (binomial(g + 1 + static_cast<int>(m) - 1, static_cast<int>(m) - 1) <= budget) ++g;
  return g;
}

struct SimplexMinOptions {
  double delta = 0.0;        // feasible set is {x : x_i >= delta, sum x = 1}
  double target = -kInf;     // stop as soon as the objective reaches this value
  double grid_budget = 5000;
  int max_polish_rounds = 400;
  double fd_step = 1e-8;
};

struct SimplexMin {
  std::vector<double> x;
  double value;
};

namespace detail {

inline double vmax(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  return m;
}

// Min-norm point of the convex hull of the rows of g (Frank-Wolfe with exact
// line search; the hull has at most a handful of points).
inline std::vector<double> min_norm_hull(const std::vector<std::vector<double>>& g) {
  const std::size_t k = g.size(), d = g[0].size();
  std::vector<double> v = g[0];
  for (std::size_t i = 1; i < k; ++i) {
    double n0 = 0, n1 = 0;
    for (std::size_t j = 0; j < d; ++j) {
      n0 += v[j] * v[j];
      n1 += g[i][j] * g[i][j];
    }
    if (n1 < n0) v = g[i];
  }
  for (int it = 0; it < 500; ++it) {
    std::size_t s = 0;
    double best = kInf;
    for (std::size_t i = 0; i < k; ++i) {
      double ip = 0;
      for (std::size_t j = 0; j < d; ++j) ip += g[i][j] * v[j];
      if (ip < best) {
        best = ip;
        s = i;
      }
    }
    double num = 0, den = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double diff = g[s][j] - v[j];
      num -= v[j] * diff;
      den += diff * diff;
    }
    if (den <= 0 || num <= 1e-30) break;
    double t = std::min(1.0, num / den);
    for (std::size_t j = 0; j < d; ++j) v[j] += t * (g[s][j] - v[j]);
  }
  return v;
}

}  // namespace detail

// Minimizes max_i f(x)_i over the delta-clipped simplex in R^m. `fvec` returns
// the component vector. Global phase: barycentric grid with two local
// refinements; local phase: descent along the min-norm subgradient of the
// near-active components and along pairwise exchange directions, each with a
// line search.
template <class FVec>
SimplexMin minimize_max_on_simplex(FVec&& fvec, std::size_t m, const SimplexMinOptions& opt = {}) {
  const double delta = opt.delta;
  const double scale = 1.0 - static_cast<double>(m) * delta;
  if (scale < 0) throw InvalidArgument("delta too large for the simplex");
  auto F = [&](const std::vector<double>& x) {
    double v = detail::vmax(fvec(x));
    return std::isnan(v) ? kInf : v;
  };
  auto from_bary = [&](const std::vector<double>& b) {
    std::vector<double> x(m);
    double s = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      x[i] = delta + scale * b[i];
      s += x[i];
    }
    x[m - 1] = 1.0 - s;
    return x;
  };

  std::vector<double> best(m, 1.0 / static_cast<double>(m));
  double best_v = F(best);
  if (best_v <= opt.target) return {best, best_v};

  const int G = grid_subdivisions(m, opt.grid_budget);
  std::vector<double> bbest(m, 1.0 / static_cast<double>(m));
  {
    std::vector<double> b(m);
    for_each_composition(G, m, [&](const std::vector<int>& c) {
      for (std::size_t i = 0; i < m; ++i) b[i] = static_cast<double>(c[i]) / G;
      auto x = from_bary(b);
      double v = F(x);
      if (v < best_v) {
        best_v = v;
        best = x;
        bbest = b;
      }
    });
  }
  if (best_v <= opt.target) return {best, best_v};

  // two local refinement levels, each 8x finer around the incumbent
  double h = 1.0 / G;
  int R = 8;
  while (std::pow(2.0 * R + 1, static_cast<double>(m - 1)) > opt.grid_budget && R > 1) --R;
  for (int level = 0; level < 2; ++level) {
    h /= 8.0;
    std::vector<double> center = bbest;
    std::vector<int> off(m - 1, -R);
    while (true) {
      std::vector<double> b(m);
      double s = 0;
      bool ok = true;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        b[i] = center[i] + off[i] * h;
        if (b[i] < 0) ok = false;
        s += b[i];
      }
      b[m - 1] = 1.0 - s;
      if (b[m - 1] < 0) ok = false;
      if (ok) {
        auto x = from_bary(b);
        double v = F(x);
        if (v < best_v) {
          best_v = v;
          best = x;
          bbest = b;
        }
      }
      std::size_t k = 0;
      while (k < m - 1 && ++off[k] > R) off[k++] = -R;
      if (k == m - 1) break;
    }
    if (best_v <= opt.target) return {best, best_v};
  }

  // local polish
  auto line_search = [&](const std::vector<double>& x, const std::vector<double>& d,
                         double fx) -> std::pair<std::vector<double>, double> {
    double tmax = kInf;
    for (std::size_t i = 0; i < m; ++i)
      if (d[i] < 0) tmax = std::min(tmax, (x[i] - delta) / -d[i]);
    if (!(tmax > 0) || tmax == kInf) return {x, fx};
    std::vector<double> y(m);
    auto at = [&](double t) {
      for (std::size_t i = 0; i < m; ++i) y[i] = std::max(delta, x[i] + t * d[i]);
      return F(y);
    };
    ScalarMin r = scan_golden_min(at, 0.0, tmax, 16, tmax * 1e-15);
    if (r.value < fx) {
      at(r.x);
      return {y, r.value};
    }
    return {x, fx};
  };

  for (int round = 0; round < opt.max_polish_rounds; ++round) {
    const double start_v = best_v;
    // near-active subgradient directions
    std::size_t piv = static_cast<std::size_t>(std::max_element(best.begin(), best.end()) - best.begin());
    auto f0 = fvec(best);
    std::vector<std::vector<double>> grads(f0.size(), std::vector<double>(m - 1, 0.0));
    bool grads_ok = true;
    {
      std::size_t col = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == piv) continue;
        double hs = std::min(opt.fd_step, 0.5 * (best[j] - delta));
        hs = std::min(hs, 0.5 * (best[piv] - delta));
        if (hs <= 0) hs = opt.fd_step;
        auto xp = best, xm = best;
        xp[j] += hs;
        xp[piv] -= hs;
        xm[j] -= hs;
        xm[piv] += hs;
        bool minus_ok = xm[j] >= 0;
        auto fp = fvec(xp);
        auto fm = minus_ok ? fvec(xm) : f0;
        double denom = minus_ok ? 2 * hs : hs;
        for (std::size_t w = 0; w < f0.size(); ++w) {
          double gw = (fp[w] - fm[w]) / denom;
          if (!std::isfinite(gw)) grads_ok = false;
          grads[w][col] = gw;
        }
        ++col;
      }
    }
    if (grads_ok && !f0.empty()) {
      for (double rel : {1e-2, 1e-4, 1e-7, 1e-11}) {
        std::vector<std::vector<double>> act;
        double thr = best_v - rel * std::max(1.0, std::abs(best_v));
        for (std::size_t w = 0; w < f0.size(); ++w)
          if (f0[w] >= thr) act.push_back(grads[w]);
        if (act.empty()) continue;
        auto v = detail::min_norm_hull(act);
        double nv = 0;
        for (double x : v) nv += x * x;
        if (nv <= 0) continue;
        std::vector<double> d(m, 0.0);
        std::size_t col = 0;
        for (std::size_t j = 0; j < m; ++j) {
          if (j == piv) continue;
          d[j] = -v[col];
          d[piv] += v[col];
          ++col;
        }
        auto [y, fy] = line_search(best, d, best_v);
        if (fy < best_v) {
          best = y;
          best_v = fy;
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        std::vector<double> d(m, 0.0);
        d[i] = 1;
        d[j] = -1;
        auto [y, fy] = line_search(best, d, best_v);
        if (fy < best_v) {
          best = y;
          best_v = fy;
        }
      }
    if (best_v <= opt.target) break;
    if (!(start_v - best_v > 1e-15 * std::max(1.0, std::abs(best_v)))) break;
  }
  return {best, best_v};
}

// Minimizes a scalar function over the full simplex. For m <= 3 a nested
// scan + golden search is used, which is exact for convex objectives and
// robust at the scan resolution otherwise.
template <class F>
SimplexMin minimize_on_simplex(F&& f, std::size_t m) {
  if (m == 2) {
    std::vector<double> x(2);
    auto g = [&](double p) {
      x[0] = 1 - p;
      x[1] = p;
      return f(x);
    };
    ScalarMin r = scan_golden_min(g, 0.0, 1.0, 64, 1e-14);
    return {{1 - r.x, r.x}, r.value};
  }
  if (m == 3) {
    std::vector<double> x(3);
    auto inner = [&](double a) {
      auto g = [&](double b) {
        x[0] = a;
        x[1] = b;
        x[2] = std::max(0.0, 1 - a - b);
        return f(x);
      };
      return scan_golden_min(g, 0.0, 1.0 - a, 32, 1e-14);
    };
    ScalarMin outer = scan_golden_min([&](double a) { return inner(a).value; }, 0.0, 1.0, 32, 1e-14);
    ScalarMin in = inner(outer.x);
    return {{outer.x, in.x, std::max(0.0, 1 - outer.x - in.x)}, in.value};
  }
  auto r = minimize_max_on_simplex([&](const std::vector<double>& x) { return std::vector<double>{f(x)}; }, m);
  return r;
}

}  // namespace pea
