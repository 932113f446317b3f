#include <gtest/gtest.h>

#include <cmath>

#include "pea/pea.hpp"

using namespace pea;

namespace {

const double kLn2 = std::log(2.0);

std::vector<double> interior_point(Rng& rng, std::size_t m, double floor = 0.02) {
  while (true) {
    auto p = rng.dirichlet(m);
    bool ok = true;
    for (double x : p) ok = ok && x >= floor;
    if (ok) return p;
  }
}

double shannon(const Distribution& pi) {
  double h = 0;
  for (double x : pi.probs())
    if (x > 0) h -= x * std::log(x);
  return h;
}

double gini(const Distribution& pi) {
  double s = 0;
  for (double x : pi.probs()) s += x * x;
  return 1 - s;
}

}  // namespace

TEST(Games, LossValues) {
  Game lg = builtin_game("log", 2);
  EXPECT_NEAR(lg.loss({0.25, 0.75}, 1), -std::log(0.75), 1e-15);
  EXPECT_TRUE(is_inf(lg.loss({1.0, 0.0}, 1)));
  Game sq = builtin_game("square", 2);
  EXPECT_NEAR(sq.loss({0.3}, 0), 0.09, 1e-15);
  EXPECT_NEAR(sq.loss({0.3}, 1), 0.49, 1e-15);
  Game ab = builtin_game("absolute", 2);
  EXPECT_NEAR(ab.loss({0.3}, 1), 0.7, 1e-15);
  Game br = builtin_game("brier", 3);
  EXPECT_NEAR(br.loss({0.2, 0.3, 0.5}, 2), 0.04 + 0.09 + 0.25, 1e-15);
  Game hl = builtin_game("hellinger", 2);
  EXPECT_NEAR(hl.loss({0.36, 0.64}, 0), 0.4, 1e-15);
  EXPECT_THROW(builtin_game("square", 3), InvalidArgument);
  EXPECT_THROW(builtin_game("nope", 2), InvalidArgument);
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(generalized_entropy(builtin_game("brier", 2), Distribution({0.5, 0.5}), 1.0).value, 0.5, 1e-9);
  EXPECT_NEAR(generalized_entropy(builtin_game("log", 2), Distribution({0.5, 0.5}), 1.0).value, kLn2, 1e-9);
  EXPECT_NEAR(generalized_entropy(builtin_game("log", 2), Distribution({1.0, 0.0}), 1.0).value, 0.0, 1e-12);
}

TEST(Entropy, ClosedFormsOnRandomPoints) {
  Rng rng(17);
  for (std::size_t m : {2u, 3u}) {
    Game lg = builtin_game("log", m), br = builtin_game("brier", m);
    for (int i = 0; i < 100; ++i) {
      Distribution pi(rng.dirichlet(m));
      EXPECT_NEAR(generalized_entropy(lg, pi, 1.0).value, shannon(pi), 1e-9);
      EXPECT_NEAR(generalized_entropy(br, pi, 1.0).value, gini(pi), 1e-9);
    }
  }
}

TEST(Entropy, HomogeneousExtension) {
  Game br = builtin_game("brier", 3);
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> x{rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
    double a = rng.uniform(0.2, 5);
    std::vector<double> ax{a * x[0], a * x[1], a * x[2]};
    EXPECT_NEAR(entropy_extension(br, ax, 1.0), a * entropy_extension(br, x, 1.0), 1e-9);
  }
}

TEST(Entropy, ConcaveAlongSegments) {
  Game lg = builtin_game("log", 3);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    Distribution a(rng.dirichlet(3)), b(rng.dirichlet(3));
    double t = rng.uniform();
    std::vector<double> mix(3);
    for (int o = 0; o < 3; ++o) mix[o] = t * a[o] + (1 - t) * b[o];
    double h = generalized_entropy(lg, Distribution::clean(mix), 1.0).value;
    EXPECT_GE(h, t * generalized_entropy(lg, a, 1.0).value + (1 - t) * generalized_entropy(lg, b, 1.0).value - 1e-9);
  }
}

TEST(Savage, MatchesDirectArgmin) {
  Rng rng(23);
  for (const char* name : {"brier", "log"}) {
    for (std::size_t m : {2u, 3u}) {
      Game g = builtin_game(name, m);
      ProperLoss derived = proper_loss_from_entropy(g, 1.0);
      for (int i = 0; i < 100; ++i) {
        Distribution pi(interior_point(rng, m));
        LossVector fd = derived(pi);
        LossVector direct = g.prediction(generalized_entropy(g, pi, 1.0).argmin);
        for (std::size_t w = 0; w < m; ++w) EXPECT_NEAR(fd[w], direct[w], 1e-5) << name << " m=" << m;
      }
    }
  }
}

TEST(Savage, AgreesWithClosedForms) {
  Rng rng(29);
  for (const char* name : {"brier", "log", "hellinger"}) {
    Game g = builtin_game(name, 3);
    ProperLoss derived = proper_loss_from_entropy(g, 1.0);
    ProperLoss exact = canonical_proper_loss(g, 1.0);
    for (int i = 0; i < 50; ++i) {
      Distribution pi(interior_point(rng, 3));
      LossVector a = derived(pi), b = exact(pi);
      for (std::size_t w = 0; w < 3; ++w) EXPECT_NEAR(a[w], b[w], 1e-6) << name;
    }
  }
}

TEST(Savage, SphericalFromHellinger) {
  ProperLoss s = proper_loss_from_entropy(builtin_game("hellinger", 2), 1.0);
  LossVector v = s(Distribution({0.6, 0.4}));
  // 1 - pi(w) / ||pi||_2
  const double n = std::sqrt(0.36 + 0.16);
  EXPECT_NEAR(v[0], 1 - 0.6 / n, 1e-7);
  EXPECT_NEAR(v[1], 1 - 0.4 / n, 1e-7);
  EXPECT_NEAR(v[0], 0.16795, 1e-5);
  EXPECT_NEAR(v[1], 0.44530, 1e-5);
}

TEST(Savage, BoundaryLimitsAreMinimizers) {
  // approaching a boundary point, the expected loss tends to H there
  Game br = builtin_game("brier", 3);
  ProperLoss derived = proper_loss_from_entropy(br, 1.0);
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    auto p = rng.dirichlet(2);
    std::vector<double> b(3, 0.0);
    std::size_t zero = rng.below(3);
    for (std::size_t o = 0, k = 0; o < 3; ++o)
      if (o != zero) b[o] = p[k++];
    Distribution target = Distribution::clean(b);
    double t = 1e-5;
    std::vector<double> near(3);
    for (int o = 0; o < 3; ++o) near[o] = (1 - t) * b[o] + t / 3;
    LossVector v = derived(Distribution::clean(near));
    EXPECT_NEAR(expected_loss(target, v), gini(target), 1e-4);
    LossVector at = derived(target);
    EXPECT_NEAR(expected_loss(target, at), gini(target), 1e-6);
  }
}

TEST(Savage, DummyOutcomeGameIsNotExtendable) {
  try {
    proper_loss_from_entropy(log_with_dummy_game(), 1.0);
    FAIL() << "expected NonExtendable";
  } catch (const NonExtendable& e) {
    ASSERT_EQ(e.face.size(), 3u);
    EXPECT_EQ(e.face[0], 0.0);
    EXPECT_EQ(e.face[1], 0.0);
    EXPECT_EQ(e.face[2], 1.0);
  }
  SavageOptions opt;
  opt.allow_interior_only = true;
  ProperLoss inner = proper_loss_from_entropy(log_with_dummy_game(), 1.0, opt);
  EXPECT_EQ(inner.domain, LossDomain::interior_only);
  LossVector v = inner(Distribution({0.2, 0.3, 0.5}));
  EXPECT_NEAR(v[0], -std::log(0.2 / 0.5), 1e-5);
  EXPECT_NEAR(v[1], -std::log(0.3 / 0.5), 1e-5);
  EXPECT_NEAR(v[2], 1.0, 1e-5);
  EXPECT_THROW(inner(Distribution({0.0, 0.0, 1.0})), DomainError);
}

TEST(Properness, StrictlyProperLosses) {
  for (const char* name : {"log", "brier"}) {
    auto r = check_proper(canonical_proper_loss(builtin_game(name, 2), 1.0), 50);
    EXPECT_LE(r.max_violation, 1e-9) << name;
    EXPECT_TRUE(r.strictness) << name;
  }
  auto sph = check_proper(proper_loss_from_entropy(builtin_game("hellinger", 2), 1.0), 50);
  EXPECT_LE(sph.max_violation, 1e-9);
  EXPECT_TRUE(sph.strictness);
  for (const char* name : {"log", "brier", "hellinger"}) {
    auto r = check_proper(canonical_proper_loss(builtin_game(name, 3), 1.0), 20);
    EXPECT_LE(r.max_violation, 1e-9) << name;
    EXPECT_TRUE(r.strictness) << name;
  }
}

TEST(Properness, RawHellingerFails) {
  auto r = check_proper(raw_hellinger_loss(2), 50);
  EXPECT_GT(r.max_violation, 1e-3);
  ASSERT_EQ(r.witness_pi.size(), 2u);
  // the witness reproduces
  Distribution pi(r.witness_pi), other(r.witness_other);
  auto l = raw_hellinger_loss(2);
  EXPECT_NEAR(expected_loss(pi, l(pi)) - expected_loss(pi, l(other)), r.max_violation, 1e-12);
}

TEST(Properness, ImproperLossIsNotStrict) {
  // the simple game's proper loss is proper but constant on half-simplices
  auto r = check_proper(canonical_proper_loss(builtin_game("simple", 2), 1.0), 20);
  EXPECT_LE(r.max_violation, 1e-12);
  EXPECT_FALSE(r.strictness);
}

TEST(Mixability, Thresholds) {
  EXPECT_TRUE(check_mixability(builtin_game("log", 2), 1.0, 5000, 1e-9).mixable);
  EXPECT_TRUE(check_mixability(builtin_game("log", 2), 0.5, 5000, 1e-9).mixable);
  EXPECT_FALSE(check_mixability(builtin_game("log", 2), 1.3, 5000, 1e-6).mixable);
  EXPECT_TRUE(check_mixability(builtin_game("square", 2), 2.0, 5000, 1e-9).mixable);
  EXPECT_FALSE(check_mixability(builtin_game("square", 2), 2.5, 5000, 1e-6).mixable);
  EXPECT_FALSE(check_mixability(builtin_game("absolute", 2), 1.0, 5000, 1e-6).mixable);
  EXPECT_TRUE(builtin_game("log", 2).mixable_at(1.0));
  EXPECT_FALSE(builtin_game("log", 2).mixable_at(1.01));
  EXPECT_FALSE(builtin_game("absolute", 2).mixable_at(0.1));
}

TEST(Realizability, MatchesScanOracle) {
  // smallest c with c * (hull boundary) inside {x + y >= 1}: max over the hull curve of 1 / (x + y)
  for (double eta : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double e = std::exp(-eta);
    double worst = 0;
    for (int i = 0; i <= 200000; ++i) {
      double u = e + (1 - e) * i / 200000.0;
      double x = -std::log(u) / eta, y = -std::log(1 + e - u) / eta;
      worst = std::max(worst, 1 / (x + y));
    }
    EXPECT_NEAR(realizability_constant(GameName::absolute, eta), worst, 1e-8) << eta;
  }
  EXPECT_NEAR(realizability_constant(GameName::absolute, 1.0), 1.316186, 1e-6);
  EXPECT_NEAR(realizability_constant(GameName::absolute, 2.0), 1.766101, 1e-6);
  EXPECT_NEAR(realizability_constant(GameName::absolute, 1e-4), 1.0, 1e-3);
  EXPECT_THROW(realizability_constant(GameName::log, 1.0), InvalidArgument);
}

TEST(Realizability, HullLossIsRealizedAfterScaling) {
  Game ab = builtin_game("absolute", 2);
  const double eta = 1.0, c = realizability_constant(GameName::absolute, eta);
  for (int i = 0; i <= 100; ++i) {
    LossVector h = absolute_hull_loss(Distribution::binary(i / 100.0), eta);
    EXPECT_TRUE(is_hull_superprediction(ab, h, eta));
    EXPECT_TRUE(is_superprediction(ab, h.scaled(c), 1e-12));
  }
  LossVector mid = absolute_hull_loss(Distribution::binary(0.5), eta);
  EXPECT_FALSE(is_superprediction(ab, mid.scaled(c * (1 - 1e-6)), 0.0));
}
