#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "../core.hpp"

namespace pea {

// One protocol round. Loss fields are per party; learner_* has one entry for
// single-loss protocols and one per expert under expert evaluators.
struct StepRecord {
  std::size_t step = 0;  // 1-based
  std::vector<std::vector<ExtReal>> advice;  // expert loss vectors as announced (realized for second-guessers)
  std::vector<double> pi;                    // Learner's distribution (empty for AA variants)
  Decision decision;
  std::size_t outcome = 0;
  std::vector<double> outcome_point;  // simplex outcome, empty for vertex outcomes
  std::vector<ExtReal> learner_loss, learner_cumulative;
  std::vector<ExtReal> expert_loss, expert_cumulative;
  double log_value = 0;  // ln Q^{P0} for DFA variants; ln sum P0 Q_N for AA variants
  double slack = 0;
  double cumulative_log_slack = 0;
  bool violated = false;  // solver could not meet its contract (recorded mode)
  std::vector<double> bound_margins;
};

struct ThetaConstants {
  double c = 1.0;
  double eta = 1.0;
  double prior = 1.0;
  std::string label;
};

struct BoundReport {
  bool ok = true;
  double worst_margin = -kInf;
  std::size_t worst_step = 0;
  bool consistent = true;  // cumulative fields are prefix sums of the instantaneous ones
};

namespace detail {

inline bool prefix_ok(ExtReal prev, ExtReal inst, ExtReal cum) {
  if (is_inf(cum)) return is_inf(prev) || is_inf(inst);
  if (is_inf(prev) || is_inf(inst)) return false;
  return std::abs(prev + inst - cum) <= 1e-9 * std::max(1.0, std::abs(cum));
}

}  // namespace detail

// Margin L_N - c L_N^theta - (c/eta)(ln(1/P0) + slack allowance) at every
// prefix; ok iff the worst margin is <= 1e-7 and the record is internally
// consistent. A consistency failure is reported at the first bad step.
inline double bound_margin(ExtReal learner_cum, ExtReal expert_cum, double c, double eta, double prior,
                           double log_slack) {
  if (is_inf(expert_cum)) return -kInf;
  if (is_inf(learner_cum)) return kInf;
  return learner_cum - c * expert_cum - (c / eta) * (std::log(1 / prior) + log_slack);
}

inline BoundReport verify_bound(const std::vector<StepRecord>& traj, std::size_t theta, double c, double eta,
                                double prior, bool strict = false) {
  BoundReport r;
  if (traj.empty()) {
    r.worst_margin = bound_margin(0, 0, c, eta, prior, 0);
    r.ok = r.worst_margin <= 1e-7;
    return r;
  }
  ExtReal prev_l = 0, prev_e = 0;
  for (const auto& s : traj) {
    const std::size_t li = s.learner_cumulative.size() == 1 ? 0 : theta;
    if (theta >= s.expert_cumulative.size() || li >= s.learner_cumulative.size())
      throw DimensionMismatch("expert index out of range for the trajectory");
    const ExtReal lc = s.learner_cumulative[li], ec = s.expert_cumulative[theta];
    if (r.consistent &&
        (!detail::prefix_ok(prev_l, s.learner_loss[li], lc) || !detail::prefix_ok(prev_e, s.expert_loss[theta], ec))) {
      r.consistent = false;
      r.ok = false;
      r.worst_step = s.step;
    }
    prev_l = lc;
    prev_e = ec;
    double m = bound_margin(lc, ec, c, eta, prior, strict ? 0.0 : s.cumulative_log_slack);
    if (m > r.worst_margin) {
      r.worst_margin = m;
      if (r.consistent) r.worst_step = s.step;
    }
  }
  if (r.worst_margin > 1e-7) r.ok = false;
  return r;
}

// Per-step non-increase of the logged potential, allowing ln(1 + slack).
struct MonotoneReport {
  bool ok = true;
  double worst_increase = -kInf;  // max over steps of increase - ln(1 + slack)
  std::size_t worst_step = 0;
};

inline MonotoneReport verify_nonincrease(const std::vector<StepRecord>& traj, double initial_log_value,
                                         double tol = 1e-9) {
  MonotoneReport r;
  double prev = initial_log_value;
  for (const auto& s : traj) {
    double inc = s.log_value - prev - std::log1p(s.slack);
    if (s.log_value == -kInf) inc = -kInf;
    if (inc > r.worst_increase) {
      r.worst_increase = inc;
      r.worst_step = s.step;
    }
    prev = s.log_value;
  }
  // an increase of ln Q by tol is a relative increase of Q by about tol
  r.ok = r.worst_increase <= tol;
  return r;
}

}  // namespace pea
