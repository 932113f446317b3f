#pragma once

#include <vector>

#include "../core.hpp"
#include "../numerics.hpp"

namespace pea {

struct OracleResult {
  Distribution pi;
  double value;  // max_w q(pi, w)
};

// Exhaustive search over the barycentric grid {c / grid : sum c = grid},
// visited in lexicographic order of c (first point (0, ..., 0, 1)); ties keep
// the earliest point.
template <class Q>
OracleResult oracle_dfa_min(Q&& qfun, std::size_t m, int grid) {
  if (grid < 10) throw InvalidArgument("oracle grid must be at least 10");
  if (m < 2) throw InvalidArgument("m must be at least 2");
  std::vector<double> x(m), best;
  double best_v = kInf;
  bool any = false;
  for_each_composition(grid, m, [&](const std::vector<int>& c) {
    for (std::size_t i = 0; i < m; ++i) x[i] = static_cast<double>(c[i]) / grid;
    Distribution pi = Distribution::clean(x);
    double v = -kInf;
    for (std::size_t w = 0; w < m; ++w) v = std::max(v, static_cast<double>(qfun(pi, w)));
    if (!any || v < best_v) {
      best_v = v;
      best = pi.probs();
      any = true;
    }
  });
  return {Distribution(best), best_v};
}

template <class Q>
Distribution oracle_dfa_solve(Q&& qfun, double C, std::size_t m, int grid) {
  (void)C;  // the minimizer does not depend on the threshold
  return oracle_dfa_min(qfun, m, grid).pi;
}

}  // namespace pea
