#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mbias/dsep_test.hpp"
#include "mbias/errors.hpp"
#include "mbias/simulate.hpp"
#include "support/oracles.hpp"

using namespace mbias;

namespace {

double lambda_of(const LinearSemSpec& s) { return s.c3 * s.c3 * s.var_z; }

}  // namespace

TEST(Theorem1, NullResidualVanishes) {
  std::mt19937_64 g(1);
  for (int rep = 0; rep < 50; ++rep) {
    auto spec = oracle::random_spec(g, false);
    spec.c0 = 0.0;
    EXPECT_NEAR(theorem1_residual(oracle::sem_stats(spec), lambda_of(spec)), 0.0, 1e-12);
  }
}

TEST(Theorem1, ResidualIsC0TimesResidualVariance) {
  std::mt19937_64 g(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto spec = oracle::random_spec(g, false);
    const auto s = oracle::sem_stats(spec);
    const double l = lambda_of(spec);
    EXPECT_NEAR(theorem1_residual(s, l), spec.c0 * (s.var_x - s.cov_xw * s.cov_xw / l), 1e-12);
    // var(X) - cov^2(XW)/lambda is the structural noise var(e_X)
    EXPECT_NEAR(s.var_x - s.cov_xw * s.cov_xw / l, spec.var_ex, 1e-12);
  }
}

TEST(Theorem1, ErrorVarianceForm) {
  std::mt19937_64 g(3);
  const auto spec = oracle::random_spec(g, false);
  const auto s = oracle::sem_stats(spec);
  const double direct = s.cov_xy - s.cov_xw * s.cov_yw / (s.var_w - spec.var_ew);
  EXPECT_NEAR(theorem1_residual(s, lambda_from_error_variance(s.var_w, spec.var_ew)), direct,
              1e-15);
  EXPECT_THROW(theorem1_residual(s, 0.0), InvalidArgument);
}

TEST(Tetrad, NullVanishes) {
  std::mt19937_64 g(4);
  auto spec = oracle::random_spec(g, true);
  spec.c0 = 0.0;
  EXPECT_NEAR(tetrad_residual(oracle::sem_stats(spec)), 0.0, 1e-12);
}

TEST(Tetrad, EqualsTheorem1WithEstimatedLambda) {
  std::mt19937_64 g(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = oracle::sem_stats(oracle::random_spec(g, true));
    EXPECT_NEAR(tetrad_residual(s), theorem1_residual(s, lambda_from_two_indicators(s)), 1e-12);
  }
}

TEST(Tetrad, SignFollowsC0) {
  std::mt19937_64 g(6);
  for (int rep = 0; rep < 20; ++rep) {
    const auto spec = oracle::random_spec(g, true);
    const double r = tetrad_residual(oracle::sem_stats(spec));
    EXPECT_EQ(std::signbit(r), std::signbit(spec.c0));
  }
}

TEST(Tetrad, NeedsNonvanishingCovWV) {
  LinearSemSpec spec;
  spec.c3 = 0.0;
  spec.c_v = 1.0;
  spec.var_ev = 1.0;
  EXPECT_THROW(tetrad_residual(oracle::sem_stats(spec)), UnidentifiableError);
}

TEST(NormalTest, DecisionConsistentWithPValue) {
  for (double z : {0.0, 0.5, 1.9599, 1.96, 2.5, -3.0}) {
    const auto r = normal_test(TestMethod::TwoStage, z, 1.0, 0.05);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    EXPECT_EQ(r.reject, r.p_value < 0.05);
  }
  EXPECT_NEAR(normal_test(TestMethod::TwoStage, 1.959963984540054, 1.0, 0.05).p_value, 0.05,
              1e-12);
}

TEST(TwoStage, PopulationMomentVanishesUnderNull) {
  // cov[Y (X - W cov(XW)/alpha)] = theorem1 residual, zero when c0 = 0.
  std::mt19937_64 g(7);
  auto spec = oracle::random_spec(g, false);
  spec.c0 = 0.0;
  const auto s = oracle::sem_stats(spec);
  const double alpha = lambda_of(spec);
  EXPECT_NEAR(s.cov_xy - s.cov_yw * s.cov_xw / alpha, 0.0, 1e-12);
  EXPECT_NEAR(oracle::two_stage_population(s, alpha, 1000).a, 0.0, 1e-12);
}

TEST(TwoStage, WrongAlphaIsDetectableInPopulation) {
  LinearSemSpec spec;
  spec.c0 = 0.0;
  spec.c1 = 1.0;
  spec.c2 = 1.0;
  spec.var_ew = 0.5;
  const auto s = oracle::sem_stats(spec);
  const double wrong = 2.0 * lambda_of(spec);
  EXPECT_GT(std::abs(oracle::two_stage_population(s, wrong, 1000).a), 0.05);
}

TEST(TwoStage, MatchesExplicitRegression) {
  std::mt19937_64 g(8);
  auto spec = oracle::random_spec(g, false);
  const auto rows = simulate_linear(spec, 500, 3).rows;
  const auto s = cov_from_samples(rows);
  const double alpha = lambda_of(spec);
  // Explicit least squares of centered Y on centered V.
  const double b = s.cov_xw / alpha;
  double mv = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    mv += rows.x[i] - b * rows.w[i];
    my += rows.y[i];
  }
  mv /= 500.0;
  my /= 500.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = rows.x[i] - b * rows.w[i] - mv;
    sxy += v * (rows.y[i] - my);
    sxx += v * v;
  }
  const auto r = two_stage_test(rows, alpha);
  EXPECT_NEAR(r.statistic, sxy / sxx, 1e-12);
  EXPECT_EQ(r.method, TestMethod::TwoStage);
}

TEST(TwoStage, StandardErrorNearPopulationValue) {
  std::mt19937_64 g(9);
  auto spec = oracle::random_spec(g, false);
  const std::size_t n = 20000;
  const auto pop = oracle::two_stage_population(oracle::sem_stats(spec), lambda_of(spec), n);
  const auto r = two_stage_test(simulate_linear(spec, n, 4).rows, lambda_of(spec));
  EXPECT_NEAR(r.std_error / pop.se, 1.0, 0.1);
}

TEST(TwoStage, NoiselessNullRejectsAtLevel) {
  LinearSemSpec spec;
  spec.c0 = 0.0;
  spec.c1 = 0.8;
  spec.c2 = -0.6;
  spec.var_ew = 1e-300;
  const double alpha = 1.0;  // var(W) = var(Z)
  int rejections = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r)
    rejections += two_stage_test(simulate_linear(spec, 2000, 1000 + r).rows, alpha).reject;
  const double rate = static_cast<double>(rejections) / reps;
  // Binomial sd at 0.05 over 500 is ~0.01.
  EXPECT_NEAR(rate, 0.05, 0.03);
}

TEST(TwoStage, ScaleInvariantPValue) {
  std::mt19937_64 g(10);
  const auto spec = oracle::random_spec(g, false);
  auto rows = simulate_linear(spec, 3000, 5).rows;
  const double alpha = lambda_of(spec);
  const auto base = two_stage_test(rows, alpha);
  for (auto& v : rows.x) v *= 2.0;
  for (auto& v : rows.y) v *= 0.5;
  for (auto& v : rows.w) v *= 3.0;
  const auto scaled = two_stage_test(rows, alpha * 9.0);
  EXPECT_NEAR(scaled.p_value, base.p_value, 1e-9);
}

TEST(TwoStage, Preconditions) {
  LinearData tiny{{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {}};
  EXPECT_THROW(two_stage_test(tiny, 1.0), InvalidArgument);
  LinearData d;
  for (int i = 0; i < 20; ++i) {
    d.x.push_back(i);
    d.w.push_back(i);
    d.y.push_back(i % 3);
  }
  // alpha = var(W) = cov(XW) makes V = X - W constant.
  const double var = cov_from_samples(d).var_w;
  EXPECT_THROW(two_stage_test(d, var), UnidentifiableError);
  EXPECT_THROW(two_stage_test(d, 0.0), InvalidArgument);
}

TEST(ResidualTest, BootstrapMethods) {
  std::mt19937_64 g(11);
  auto spec = oracle::random_spec(g, true);
  spec.c0 = 0.0;
  const auto rows = simulate_linear(spec, 5000, 6).rows;
  const auto t1 = residual_test(rows, TestMethod::Theorem1, lambda_of(spec), 0.05, 200, 1);
  const auto tt = residual_test(rows, TestMethod::Tetrad, 0.0, 0.05, 200, 1);
  EXPECT_EQ(t1.method, TestMethod::Theorem1);
  EXPECT_EQ(tt.method, TestMethod::Tetrad);
  EXPECT_GT(t1.std_error, 0.0);
  EXPECT_GT(tt.std_error, 0.0);
  EXPECT_LT(std::abs(t1.statistic), 4.0 * t1.std_error);
  EXPECT_LT(std::abs(tt.statistic), 4.0 * tt.std_error);

  spec.c0 = 0.5;
  const auto alt = residual_test(simulate_linear(spec, 5000, 7).rows, TestMethod::Tetrad, 0.0,
                                 0.05, 200, 1);
  EXPECT_TRUE(alt.reject);
}

TEST(TestMethodNames, RoundTrip) {
  for (auto m : {TestMethod::Theorem1, TestMethod::Tetrad, TestMethod::TwoStage})
    EXPECT_EQ(test_method_from_string(to_string(m)), m);
  EXPECT_EQ(test_method_from_string("two-stage"), TestMethod::TwoStage);
  EXPECT_THROW(test_method_from_string("wald"), InvalidArgument);
}
