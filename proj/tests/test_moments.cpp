#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ball_quadrature.hpp"
#include "roa/moments.hpp"
#include "roa/sos.hpp"

namespace roa {
namespace {

constexpr double kPi = std::numbers::pi;

Polynomial ball_q(std::size_t n) {
  Polynomial q(n);
  for (std::size_t i = 0; i < n; ++i) q.add_term(Monomial::unit(n, i, 2), 1.0);
  return q;
}

TEST(BallMoment, UnitDiskArea) {
  EXPECT_NEAR(ball_moment({0, 0}, 1.0), kPi, 1e-14);
}

TEST(BallMoment, OddExponentVanishes) {
  EXPECT_EQ(ball_moment({1, 2}, 1.0), 0.0);
}

TEST(BallMoment, SecondMomentOfDisk) {
  EXPECT_NEAR(ball_moment({2, 0}, 1.0), kPi / 4, 1e-14);
  EXPECT_NEAR(testing::ball_quadrature({2, 0}, 1.0), kPi / 4, 1e-8);
}

TEST(BallMoment, NonPositiveRadiusThrows) {
  EXPECT_THROW(ball_moment({0, 0}, 0.0), std::invalid_argument);
  EXPECT_THROW(ball_moment({0, 0}, -1.0), std::invalid_argument);
}

TEST(BallMoment, StateBlockOnly) {
  // third variable is a perturbation
  EXPECT_NEAR(ball_moment(Monomial({2, 0, 0}), 1.0, 2), kPi / 4, 1e-14);
  EXPECT_THROW(ball_moment(Monomial({0, 0, 1}), 1.0, 2), std::invalid_argument);
}

// mpmath at 30 digits
TEST(BallMoment, HighPrecisionValues) {
  EXPECT_NEAR(ball_moment({4, 2}, 1.01), 0.051080529892376245922111139685, 1e-15);
  EXPECT_NEAR(ball_moment({2, 0}, 1.01) - ball_moment({2, 0}, 0.01), 0.801106126665397275807974062736, 1e-14);
}

TEST(BallMoment, LargeDegreeStaysFinite) {
  const double v = ball_moment({40, 40, 40}, 1.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 0.0);
}

TEST(BallMoment, MatchesQuadratureUpToDegreeTen) {
  for (std::size_t n = 1; n <= 2; ++n) {
    auto basis = monomial_basis(n, 10);
    for (const auto& m : basis) {
      const double exact = ball_moment(m.exponents(), 1.3);
      const double quad = testing::ball_quadrature(m.exponents(), 1.3);
      if (exact == 0.0) {
        EXPECT_NEAR(quad, 0.0, 1e-10);
      } else {
        EXPECT_NEAR(quad / exact, 1.0, 1e-6) << Polynomial::monomial(m).to_string();
      }
    }
  }
}

TEST(BallMoment, ScalingLaw) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> e(0, 4);
  std::uniform_real_distribution<double> r(0.1, 3.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + t % 3;
    std::vector<int> k(n);
    int tot = 0;
    for (auto& x : k) {
      x = 2 * e(rng);
      tot += x;
    }
    const double r2 = r(rng), s = r(rng);
    const double lhs = ball_moment(k, s * r2);
    const double rhs = std::pow(s, 0.5 * (tot + static_cast<double>(n))) * ball_moment(k, r2);
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-10);
  }
}

TEST(BallMoment, EvenMomentsPositive) {
  for (std::size_t n = 1; n <= 3; ++n) {
    for (const auto& m : monomial_basis(n, 12)) {
      bool even = true;
      for (int x : m.exponents()) even = even && x % 2 == 0;
      if (even) EXPECT_GT(ball_moment(m.exponents(), 0.5), 0.0);
    }
  }
}

TEST(ObjectiveVector, AnnulusArea) {
  SeedSet seed{ball_q(2), 0.01};
  const std::vector<Monomial> basis{Monomial(2)};
  auto l = objective_vector(basis, 1.01, seed, 2);
  EXPECT_NEAR(l.at(Monomial(2)), kPi, 1e-13);
}

TEST(ObjectiveVector, OddMonomialsVanishWithBallSeed) {
  SeedSet seed{ball_q(2), 0.01};
  auto l = objective_vector(monomial_basis(2, 7), 1.01, seed, 2);
  for (const auto& [m, v] : l.entries) {
    if (m[0] % 2 || m[1] % 2) EXPECT_EQ(v, 0.0);
  }
}

TEST(ObjectiveVector, AnnulusSecondMoment) {
  SeedSet seed{ball_q(2), 0.01};
  auto l = objective_vector({Monomial({2, 0})}, 1.01, seed, 2);
  EXPECT_NEAR(l.at(Monomial({2, 0})), kPi / 4 * (1.01 * 1.01 - 0.01 * 0.01), 1e-13);
  const double quad = testing::ball_quadrature({2, 0}, 1.01) - testing::ball_quadrature({2, 0}, 0.01);
  EXPECT_NEAR(l.at(Monomial({2, 0})), quad, 1e-8);
}

TEST(ObjectiveVector, BasisOverJointUniverse) {
  // x, y state; d perturbation
  Polynomial q(3);
  q.add_term(Monomial({2, 0, 0}), 1.0);
  q.add_term(Monomial({0, 2, 0}), 1.0);
  SeedSet seed{q, 0.01};
  const auto basis = monomial_basis(3, 4, {0, 1});
  auto l = objective_vector(basis, 1.01, seed, 2);
  EXPECT_EQ(l.entries.size(), basis.size());
  EXPECT_NEAR(l.at(Monomial({0, 0, 0})), kPi, 1e-13);
}

TEST(ObjectiveVector, SeedOutsideBallRejected) {
  SeedSet seed{ball_q(2), 2.0};
  EXPECT_THROW(objective_vector({Monomial(2)}, 1.01, seed, 2), std::invalid_argument);
}

TEST(ObjectiveVector, MonteCarloAgreesWithClosedForm) {
  // 2 x^2 + 2 y^2 < 0.5 is the ball of squared radius 0.25, but not
  // recognised as one, so the sampler runs
  Polynomial q = 2.0 * ball_q(2);
  SeedSet seed{q, 0.5};
  ASSERT_FALSE(is_ball_seed(q, 2));
  MomentOptions o;
  o.mc_samples = 200000;
  o.seed = 9;
  const auto basis = monomial_basis(2, 4);
  auto mc = objective_vector(basis, 1.0, seed, 2, o);
  for (const auto& m : basis) {
    const double exact = ball_moment(m, 1.0, 2) - ball_moment(m, 0.25, 2);
    const double se = mc.std_errors.at(m);
    EXPECT_LE(std::abs(mc.at(m) - exact), 3.0 * se + 1e-12) << Polynomial::monomial(m).to_string();
  }
}

TEST(ObjectiveVector, MonteCarloDetectsSeedLeavingBall) {
  Polynomial q = 2.0 * ball_q(2);
  SeedSet seed{q, 4.0};  // squared radius 2 > R
  MomentOptions o;
  o.mc_samples = 20000;
  EXPECT_THROW(objective_vector({Monomial(2)}, 1.0, seed, 2, o), std::invalid_argument);
}

TEST(ObjectiveVector, MonteCarloIsReproducible) {
  SeedSet seed{2.0 * ball_q(2), 0.5};
  MomentOptions o;
  o.mc_samples = 5000;
  o.seed = 4;
  const auto basis = monomial_basis(2, 2);
  auto a = objective_vector(basis, 1.0, seed, 2, o);
  auto b = objective_vector(basis, 1.0, seed, 2, o);
  EXPECT_EQ(a.entries, b.entries);
}

}  // namespace
}  // namespace roa
