#include <gtest/gtest.h>

#include <cmath>

#include "pea/pea.hpp"

using namespace pea;

namespace {

const double kLn2 = std::log(2.0);

LossVector log_pred(double p) { return builtin_game("log", 2).prediction({1 - p, p}); }

}  // namespace

TEST(SecondGuessDfa, ConstantExpertsMatchPlainDfa) {
  Game lg = builtin_game("log", 2);
  auto s = dfa_init(canonical_proper_loss(lg, 1.0), 1.0, 1.0, Distribution::uniform(3));
  Rng rng(5);
  for (int n = 0; n < 50; ++n) {
    std::vector<LossVector> adv{log_pred(rng.uniform()), log_pred(rng.uniform()), log_pred(rng.uniform())};
    std::vector<SecondGuessExpert> ex;
    for (const auto& a : adv) ex.push_back(constant_expert(a));
    auto plain = dfa_predict(s, adv);
    auto sg = sg_dfa_step(s, ex, rng.below(2));
    EXPECT_NEAR(plain.pi[1], sg.prediction.pi[1], 1e-14);
    s = sg.state;
  }
}

TEST(SecondGuessDfa, IdentityExpertHasNoRegret) {
  Game sq = builtin_game("square", 2);
  auto s = dfa_init(canonical_proper_loss(sq, 2.0), 1.0, 2.0, Distribution({1.0}));
  std::vector<SecondGuessExpert> ex{identity_expert()};
  Rng rng(6);
  for (int n = 0; n < 30; ++n) {
    auto step = sg_dfa_step(s, ex, rng.below(2));
    EXPECT_EQ(step.prediction.pi[1], 0.0);  // q == 1 everywhere: first early exit
    s = step.state;
  }
  EXPECT_NEAR(s.cumulative_loss, s.per_expert_loss[0], 1e-12);
}

TEST(SecondGuessDfa, ContrarianBound) {
  Game lg = builtin_game("log", 2);
  auto s = dfa_init(canonical_proper_loss(lg, 1.0), 1.0, 1.0, Distribution::uniform(2));
  std::vector<SecondGuessExpert> ex{contrarian_expert(lg), constant_expert(log_pred(0.5))};
  Rng rng(300);
  for (int n = 0; n < 300; ++n) {
    auto step = sg_dfa_step(s, ex, rng.uniform() < 0.7 ? 1 : 0);
    // the contrarian's realized advice is the mirror of Learner's decision
    EXPECT_NEAR(step.advice[0][0], step.prediction.prediction[1], 1e-6);
    s = step.state;
    for (std::size_t k = 0; k < 2; ++k)
      EXPECT_LE(s.cumulative_loss, s.per_expert_loss[k] + kLn2 + s.cumulative_log_slack + 1e-7);
  }
}

TEST(SecondGuessDfa, RejectsAdviceOutsideTheSet) {
  Game ab = builtin_game("absolute", 2);
  SecondGuessExpert bad{[](const LossVector&) { return LossVector{0.1, 0.1}; }, 0.0, "bad"};
  auto s = dfa_init(canonical_proper_loss(builtin_game("square", 2), 2.0), 1.0, 2.0, Distribution({1.0}));
  EXPECT_THROW(detail::eval_experts(ab, {bad}, LossVector{0.5, 0.5}, true), DomainError);
  // the solver cannot meet its contract with such an expert; in recorded mode
  // the step goes on and the announced advice is rejected
  EXPECT_THROW(sg_dfa_step(s, {bad}, 0), ContractViolation);
  DfaOptions rec;
  rec.record_violations = true;
  EXPECT_THROW(sg_dfa_step(s, {bad}, 0, rec), DomainError);
}

TEST(SecondGuessExperts, Construction) {
  EXPECT_THROW(contrarian_expert(builtin_game("log", 3)), InvalidArgument);
  EXPECT_THROW(flip_expert(builtin_game("log", 2)), InvalidArgument);
  Game simple = builtin_game("simple", 2);
  auto flip = flip_expert(simple);
  auto out = flip(LossVector{0.0, 1.0});
  EXPECT_EQ(out[0], 1.0);
  EXPECT_EQ(out[1], 0.0);
  auto contra = contrarian_expert(builtin_game("square", 2));
  auto c = contra(builtin_game("square", 2).prediction({0.2}));
  EXPECT_NEAR(c[0], 0.64, 1e-6);
  EXPECT_NEAR(c[1], 0.04, 1e-6);
}

TEST(SecondGuessAA, ConstantExpertsMatchPlainAA) {
  Game lg = builtin_game("log", 2);
  auto s = aa_init(lg, 1.0, 1.0, Distribution::uniform(3));
  Rng rng(7);
  for (int n = 0; n < 30; ++n) {
    std::vector<LossVector> adv{log_pred(rng.uniform()), log_pred(rng.uniform()), log_pred(rng.uniform())};
    std::vector<SecondGuessExpert> ex;
    for (const auto& a : adv) ex.push_back(constant_expert(a));
    auto plain = aa_predict(s, adv);
    auto step = sg_aa_step(s, ex, rng.below(2));
    EXPECT_NEAR(plain.decision[1], step.prediction.decision[1], 1e-9);
    EXPECT_LE(step.prediction.residual, 1e-8);
    s = step.state;
  }
}

TEST(SecondGuessAA, IdentityExpertIsAFixedPointEverywhere) {
  Game lg = builtin_game("log", 2);
  auto s = aa_init(lg, 1.0, 1.0, Distribution({1.0}));
  auto r = sg_aa_fixed_point(s, {identity_expert()});
  EXPECT_LE(r.residual, 1e-8);
  EXPECT_EQ(r.decision[1], 0.0);  // left endpoint is already fixed
}

TEST(SecondGuessAA, ContrarianAgreesWithDfa) {
  Game lg = builtin_game("log", 2);
  auto aa = aa_init(lg, 1.0, 1.0, Distribution::uniform(2));
  auto dfa = dfa_init(canonical_proper_loss(lg, 1.0), 1.0, 1.0, Distribution::uniform(2));
  std::vector<SecondGuessExpert> ex{contrarian_expert(lg), constant_expert(log_pred(0.5))};
  Rng rng(50);
  for (int n = 0; n < 50; ++n) {
    std::size_t omega = rng.uniform() < 0.7 ? 1 : 0;
    auto a = sg_aa_step(aa, ex, omega);
    auto d = sg_dfa_step(dfa, ex, omega);
    EXPECT_LE(a.prediction.residual, 1e-8);
    EXPECT_NEAR(a.prediction.decision[1], d.prediction.decision[1], 1e-4);
    aa = a.state;
    dfa = d.state;
    for (std::size_t k = 0; k < 2; ++k) EXPECT_LE(aa.cumulative_loss, aa.per_expert_loss[k] + kLn2 + 1e-7);
  }
}

TEST(SecondGuessAA, SquareContrarianBound) {
  Game sq = builtin_game("square", 2);
  auto s = aa_init(sq, 1.0, 2.0, Distribution::uniform(2));
  std::vector<SecondGuessExpert> ex{contrarian_expert(sq), constant_expert(sq.prediction({0.3}))};
  Rng rng(8);
  for (int n = 0; n < 100; ++n) {
    auto step = sg_aa_step(s, ex, rng.below(2));
    EXPECT_LE(step.prediction.residual, 1e-8);
    s = step.state;
    for (std::size_t k = 0; k < 2; ++k) EXPECT_LE(s.cumulative_loss, s.per_expert_loss[k] + 0.5 * kLn2 + 1e-7);
  }
}

TEST(SecondGuessAA, DampedIterationOnThreeOutcomes) {
  Game l3 = builtin_game("log", 3);
  auto s = aa_init(l3, 1.0, 1.0, Distribution::uniform(2));
  // an expert that leans towards Learner's own prediction, and a constant one
  SecondGuessExpert lean{[l3](const LossVector& g) {
                           Decision d = substitute(l3, g, 1e-7);
                           std::vector<double> p(3);
                           for (int o = 0; o < 3; ++o) p[o] = 0.5 * d[o] + 0.5 * (o == 0 ? 0.6 : 0.2);
                           return l3.prediction(Distribution::clean(p).probs());
                         },
                         0.5, "lean"};
  std::vector<SecondGuessExpert> ex{lean, constant_expert(l3.prediction({0.2, 0.3, 0.5}))};
  auto r = sg_aa_fixed_point(s, ex);
  EXPECT_LE(r.residual, 1e-8);
  EXPECT_GT(r.iterations, 1);
  FixedPointOptions tight;
  tight.max_iterations = 2;
  EXPECT_THROW(sg_aa_fixed_point(s, ex, tight), NoConvergence);
}

TEST(SecondGuessExperts, ContinuityProbe) {
  Game lg = builtin_game("log", 2);
  Rng rng(90);
  auto id = probe_continuity(lg, identity_expert(), rng);
  EXPECT_EQ(id.pairs, 100);
  EXPECT_NEAR(id.worst_ratio, 1.0, 1e-9);
  EXPECT_FALSE(id.suspect);
  EXPECT_FALSE(probe_continuity(lg, contrarian_expert(lg), rng).suspect);
  // a jump at p = 1/2 is caught once a probe pair straddles it
  SecondGuessExpert step{[lg](const LossVector& g) {
                           return lg.prediction({substitute(lg, g, 1e-7).back() < 0.5 ? 0.1 : 0.9});
                         },
                         std::nullopt, "step"};
  auto s = probe_continuity(lg, step, rng, 20000);
  EXPECT_TRUE(s.suspect);
  ASSERT_EQ(s.witness_a.size(), 2u);
  EXPECT_LT(std::min(s.witness_a[1], s.witness_b[1]), 0.5);
  EXPECT_GE(std::max(s.witness_a[1], s.witness_b[1]), 0.5);
  // isolated predictions are not probed
  EXPECT_EQ(probe_continuity(builtin_game("simple", 2), flip_expert(builtin_game("simple", 2)), rng).pairs, 0);
}
