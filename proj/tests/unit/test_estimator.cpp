#include "submc/estimator.hpp"
#include "submc/models.hpp"
#include "submc/variates.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace submc;
using namespace submc::testing;

namespace
{

struct Moments
{
  double mean_value = 0.0;
  double mean_square = 0.0;
  double mean_variance = 0.0;
};

// Expectation over every index tuple, weighted by its draw probability.
Moments enumerate(const std::vector<double>& l, const std::vector<double>& q,
                  const std::vector<double>& p, std::size_t m)
{
  const std::size_t n = l.size();
  const double known = std::accumulate(q.begin(), q.end(), 0.0);
  std::size_t tuples = 1;
  for(std::size_t i = 0; i < m; ++i)
    tuples *= n;

  Moments out;
  std::vector<Term> terms(m);
  for(std::size_t code = 0; code < tuples; ++code)
  {
    std::size_t c = code;
    double weight = 1.0;
    for(std::size_t i = 0; i < m; ++i)
    {
      const std::size_t k = c % n;
      c /= n;
      terms[i] = {k, l[k], q[k], p[k]};
      weight *= p[k];
    }
    const LogLikEstimate e = estimate_from_terms(terms, known, 0);
    out.mean_value += weight * e.value;
    out.mean_square += weight * e.value * e.value;
    out.mean_variance += weight * e.variance;
  }
  return out;
}

std::vector<double> normalise(std::vector<double> w)
{
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for(auto& x : w)
    x /= s;
  return w;
}

} // namespace

TEST(Estimator, HomogeneousPopulationHasNoVariance)
{
  const std::size_t n = 7;
  std::vector<Term> terms;
  for(std::size_t i = 0; i < 4; ++i)
    terms.push_back({i, -2.5, 0.0, 1.0 / n});
  const auto e = estimate_from_terms(terms, 0.0, 0);
  EXPECT_DOUBLE_EQ(e.value, n * -2.5);
  EXPECT_EQ(e.variance, 0.0);
}

TEST(Estimator, PerfectVariatesGiveTheTotal)
{
  const std::vector<double> l{-1.0, -4.0, -0.5};
  std::vector<Term> terms{{0, l[0], l[0], 0.2}, {2, l[2], l[2], 0.5}, {2, l[2], l[2], 0.5}};
  const auto e = estimate_from_terms(terms, -5.5, 3);
  EXPECT_EQ(e.value, -5.5);
  EXPECT_EQ(e.variance, 0.0);
  EXPECT_EQ(e.cost, 3u + 3u);
}

TEST(Estimator, OneTwoThreeEnumeration)
{
  const auto mo = enumerate({1, 2, 3}, {0, 0, 0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
  EXPECT_NEAR(mo.mean_value, 6.0, 1e-12);
  EXPECT_NEAR(mo.mean_variance, 3.0, 1e-12);
  EXPECT_NEAR(mo.mean_square - mo.mean_value * mo.mean_value, 3.0, 1e-12);
}

TEST(Estimator, VarianceArithmetic)
{
  const std::vector<double> same{5, 5, 5};
  EXPECT_EQ(estimate_variance(same), 0.0);
  const std::vector<double> two{0, 2};
  EXPECT_DOUBLE_EQ(estimate_variance(two), 1.0);
  const std::vector<double> one{1};
  EXPECT_THROW(estimate_variance(one), Error);
}

TEST(Estimator, Errors)
{
  std::vector<Term> bad{{0, 1.0, 0.0, 0.0}, {1, 1.0, 0.0, 0.5}};
  try
  {
    estimate_from_terms(bad, 0.0, 0);
    FAIL();
  }
  catch(const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::invalid_design);
  }
  std::vector<Term> single{{0, 1.0, 0.0, 1.0}};
  try
  {
    estimate_from_terms(single, 0.0, 0);
    FAIL();
  }
  catch(const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_sample);
  }
}

TEST(EstimatorProperty, ExhaustiveUnbiasedness)
{
  Rng rng(101);
  for(int trial = 0; trial < 40; ++trial)
  {
    const std::size_t n = integer(rng, 1, 6);
    const auto l = values(rng, n, -10.0, 0.0);
    const auto q = trial % 2 ? values(rng, n, -10.0, 0.0) : std::vector<double>(n, 0.0);
    const double total = std::accumulate(l.begin(), l.end(), 0.0);
    const std::vector<std::vector<double>> designs{
      std::vector<double>(n, 1.0 / n), normalise(values(rng, n, 0.1, 1.0)),
      normalise(std::vector<double>(l.begin(), l.end())), normalise(values(rng, n, 1.0, 100.0))};
    for(const auto& p : designs)
      for(std::size_t m = 2; m <= 3; ++m)
      {
        const auto mo = enumerate(l, q, p, m);
        const double var = mo.mean_square - mo.mean_value * mo.mean_value;
        EXPECT_TRUE(near_relative(mo.mean_value, total, 1e-12)) << n << " " << m;
        EXPECT_NEAR(mo.mean_variance, var, 1e-12 * std::max(1.0, mo.mean_square));
      }
  }
}

TEST(EstimatorProperty, ShrinkingTheResidualNeverRaisesVariance)
{
  // q = l + t (q' - l) with t in [0, 1) is closer to l everywhere; the SRS
  // variance scales by t^2.
  Rng rng(7);
  for(int trial = 0; trial < 50; ++trial)
  {
    const std::size_t n = integer(rng, 2, 5);
    const auto l = values(rng, n, -5.0, 0.0);
    const auto qp = values(rng, n, -5.0, 0.0);
    const double t = uniform(rng, 0.0, 0.999);
    std::vector<double> q(n);
    for(std::size_t k = 0; k < n; ++k)
      q[k] = l[k] + t * (qp[k] - l[k]);
    const std::vector<double> p(n, 1.0 / n);
    const auto a = enumerate(l, q, p, 2);
    const auto b = enumerate(l, qp, p, 2);
    EXPECT_LE(a.mean_square - a.mean_value * a.mean_value,
              b.mean_square - b.mean_value * b.mean_value + 1e-12);
  }
}

TEST(Estimator, BiasCorrection)
{
  LogLikEstimate e;
  e.value = -123.4;
  e.variance = 0.0;
  EXPECT_EQ(bias_corrected_log_likelihood(e), -123.4);
  e.variance = 2.0;
  EXPECT_DOUBLE_EQ(bias_corrected_log_likelihood(e), -124.4);
}

TEST(Estimator, LogNormalMeanIdentity)
{
  // E exp(X - s2 / 2) = 1 for X ~ N(0, s2).
  Rng rng(3);
  const double s2 = 0.5;
  std::normal_distribution<double> z(0.0, std::sqrt(s2));
  const int reps = 200000;
  double sum = 0.0, sum2 = 0.0;
  for(int i = 0; i < reps; ++i)
  {
    LogLikEstimate e;
    e.value = z(rng);
    e.variance = s2;
    const double r = std::exp(bias_corrected_log_likelihood(e));
    sum += r;
    sum2 += r * r;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, 1.0, 4.0 * se);
}

TEST(Estimator, AdaptiveSampleSize)
{
  LogLikEstimate e;
  e.subsample_size = 100;
  e.variance = 1.5;
  EXPECT_EQ(adaptive_sample_size(e, 1.5), 100u);
  e.variance = 3.0;
  EXPECT_EQ(adaptive_sample_size(e, 1.5), 200u);
  e.variance = 1.01;
  EXPECT_EQ(adaptive_sample_size(e, 1.0), 101u);
  e.variance = 50.0;
  EXPECT_EQ(adaptive_sample_size(e, 1.0, 1000), 1000u);
  try
  {
    adaptive_sample_size(e, 0.0);
    FAIL();
  }
  catch(const Error& err)
  {
    EXPECT_EQ(err.code(), ErrorCode::invalid_tolerance);
  }
}

TEST(Estimator, AdaptiveRuleMatchesEquationEight)
{
  // ceil(m s2 / v) equals ceil(sum (z - zbar)^2 / (v (m - 1))) with z the
  // scaled differences before the 1/m factor.
  Rng rng(5);
  for(int trial = 0; trial < 100; ++trial)
  {
    const std::size_t m = integer(rng, 2, 40);
    std::vector<Term> terms;
    for(std::size_t i = 0; i < m; ++i)
      terms.push_back({i, uniform(rng, -3, 0), 0.0, 0.01});
    const auto e = estimate_from_terms(terms, 0.0, 0);
    double mean = 0.0;
    for(const auto& t : terms)
      mean += t.scaled_difference() / m;
    double ss = 0.0;
    for(const auto& t : terms)
      ss += (t.scaled_difference() - mean) * (t.scaled_difference() - mean);
    const double v = uniform(rng, 0.5, 5.0);
    const double direct = ss / (v * (m - 1));
    EXPECT_NEAR(static_cast<double>(m) * e.variance / v, direct, 1e-9 * std::max(1.0, direct));
  }
}

TEST(SignSplit, NormalModel)
{
  Rng rng(2);
  const Vector y = normal_vector(rng, 50, 2.0);
  NormalModel model(y, 1.5);
  Vector mu(1);
  mu << 0.3;
  double total = 0.0;
  for(std::size_t k = 0; k < model.size(); ++k)
  {
    const auto s = model.sign_split(mu, k);
    EXPECT_LE(s.shifted_contribution, 0.0);
    EXPECT_DOUBLE_EQ(s.shift, -0.5 * std::log(2.0 * M_PI * 1.5 * 1.5));
    EXPECT_NEAR(s.shifted_contribution + s.shift, model.contribution(mu, k), 1e-14);
    total += s.shifted_contribution + s.shift;
  }
  EXPECT_TRUE(near_relative(total, model.full_loglik(mu), 1e-12));

  Vector at(1);
  at << y[0];
  EXPECT_EQ(model.sign_split(at, 0).shifted_contribution, 0.0);
}

TEST(SignSplit, UnsupportedModel)
{
  LogisticData d;
  d.y = Vector::Ones(2);
  d.x = DataMatrix::Ones(2, 1);
  LogisticModel model(d);
  try
  {
    model.sign_split(Vector::Zero(1), 0);
    FAIL();
  }
  catch(const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::unsupported_operation);
  }
}

TEST(Estimator, CostAccounting)
{
  Rng rng(9);
  const Vector y = normal_vector(rng, 40);
  NormalModel model(y, 1.0);
  const Population pop = Population::of(model);
  ZeroVariates zero;
  const Subsample u = draw_srs(pop.size(), 13, rng);
  const auto e = estimate_loglik(model, Vector::Zero(1), pop, u, zero);
  EXPECT_EQ(e.cost, 13u);
  EXPECT_EQ(e.subsample_size, 13u);
}
