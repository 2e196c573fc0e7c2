#include "submc/clustering.hpp"
#include "submc/datasets.hpp"
#include "submc/glm.hpp"
#include "submc/models.hpp"
#include "submc/variates.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <filesystem>

using namespace submc;
using namespace submc::testing;

namespace
{

DataMatrix column(std::initializer_list<double> xs)
{
  DataMatrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for(double x : xs)
    m(i++, 0) = x;
  return m;
}

// l(c) + g'(z - c) + (z - c)' H (z - c) / 2 written out by hand.
double taylor_by_hand(const Vector& z, const Vector& c, const DataDerivatives& d)
{
  const Vector b = z - c;
  double quad = 0.0;
  for(Eigen::Index i = 0; i < b.size(); ++i)
    for(Eigen::Index j = 0; j < b.size(); ++j)
      quad += b[i] * d.hessian(i, j) * b[j];
  return d.value + d.gradient.dot(b) + 0.5 * quad;
}

LogisticModel logistic(std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  Vector beta(4);
  beta << -0.3, 0.8, -0.5, 0.2;
  return LogisticModel(generate_logistic(beta, n, rng));
}

} // namespace

TEST(Clustering, HandTrace)
{
  const auto c = cluster_epsilon_ball(column({0.0, 0.1, 5.0}), 0.5);
  ASSERT_EQ(c.clusters(), 2u);
  EXPECT_EQ(c.assignments, (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(c.counts, (std::vector<std::size_t>{2, 1}));
  EXPECT_DOUBLE_EQ(c.centroids(0, 0), 0.05);
  EXPECT_DOUBLE_EQ(c.centroids(1, 0), 5.0);
  EXPECT_EQ(c.seeds, (std::vector<std::size_t>{0, 2}));
}

TEST(Clustering, ExtremeRadii)
{
  Rng rng(1);
  const DataMatrix x = normal_points(rng, 50, 3);
  const auto one = cluster_epsilon_ball(x, 100.0);
  ASSERT_EQ(one.clusters(), 1u);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  EXPECT_LT((one.centroids.row(0) - mean).norm(), 1e-12);

  const auto singletons = cluster_epsilon_ball(x, 1e-9);
  ASSERT_EQ(singletons.clusters(), 50u);
  for(Eigen::Index i = 0; i < 50; ++i)
    EXPECT_EQ(singletons.centroids.row(singletons.assignments[i]), x.row(i));
}

TEST(Clustering, InvalidRadius)
{
  for(double eps : {0.0, -1.0})
  {
    try
    {
      cluster_epsilon_ball(column({1.0, 2.0}), eps);
      FAIL();
    }
    catch(const Error& e)
    {
      EXPECT_EQ(e.code(), ErrorCode::invalid_config);
    }
  }
}

TEST(ClusteringProperty, PartitionAndSeedDistance)
{
  Rng rng(2);
  for(int trial = 0; trial < 30; ++trial)
  {
    const std::size_t n = integer(rng, 1, 300);
    const std::size_t d = integer(rng, 1, 4);
    const double eps = uniform(rng, 0.05, 2.0);
    const DataMatrix x = normal_points(rng, n, d);
    const auto c = cluster_epsilon_ball(x, eps);

    std::size_t total = 0;
    for(auto k : c.counts)
      total += k;
    EXPECT_EQ(total, n);
    std::vector<std::size_t> seen(c.clusters());
    for(std::size_t i = 0; i < n; ++i)
    {
      const std::size_t j = c.assignments[i];
      ASSERT_LT(j, c.clusters());
      ++seen[j];
      EXPECT_LE((x.row(i) - x.row(c.seeds[j])).norm(), eps + 1e-12);
    }
    EXPECT_EQ(seen, c.counts);
    // Seeds are founded in index order.
    EXPECT_TRUE(std::is_sorted(c.seeds.begin(), c.seeds.end()));
    EXPECT_LE(c.max_seed_distance, eps + 1e-12);
  }
}

TEST(Clustering, StandardizerHandlesConstants)
{
  DataMatrix x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const auto s = Standardizer::fit(x);
  const DataMatrix z = s.apply(x);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-15);
  EXPECT_EQ(s.scale[1], 1.0);
  EXPECT_EQ(z(0, 1), 0.0);
}

TEST(CentroidStatistics, SingletonAndSymmetricPair)
{
  DataMatrix pts(3, 2);
  pts << -1.0, 2.0, 1.0, -2.0, 40.0, 40.0;
  const auto c = cluster_epsilon_ball(pts, 5.0);
  ASSERT_EQ(c.clusters(), 2u);
  const auto s = precompute_centroid_statistics(pts, c);
  EXPECT_LT(s[0].centroid.norm(), 1e-15);
  EXPECT_LT(s[0].deviation_sum.norm(), 1e-15);
  Vector a(2);
  a << 1.0, -2.0;
  EXPECT_LT((s[0].deviation_outer_sum - 2.0 * a * a.transpose()).norm(), 1e-14);
  EXPECT_LT(s[1].deviation_sum.norm(), 1e-15);
  EXPECT_LT(s[1].deviation_outer_sum.norm(), 1e-15);
}

TEST(CentroidStatistics, BruteForceSums)
{
  Rng rng(3);
  const DataMatrix x = normal_points(rng, 400, 3);
  const auto c = cluster_epsilon_ball(x, 0.8);
  const auto s = precompute_centroid_statistics(x, c);
  const auto members = c.members();
  for(std::size_t j = 0; j < c.clusters(); ++j)
  {
    Vector centroid = Vector::Zero(3);
    for(auto i : members[j])
      centroid += x.row(i).transpose();
    centroid /= static_cast<double>(members[j].size());
    Vector sum = Vector::Zero(3);
    Matrix outer = Matrix::Zero(3, 3);
    for(auto i : members[j])
    {
      const Vector b = x.row(i).transpose() - centroid;
      sum += b;
      outer += b * b.transpose();
    }
    EXPECT_LT((s[j].centroid - centroid).norm(), 1e-12);
    EXPECT_LT((s[j].deviation_sum - sum).norm(), 1e-12);
    EXPECT_LT((s[j].deviation_outer_sum - outer).norm(), 1e-12);
    EXPECT_LT((outer - outer.transpose()).norm(), 1e-15);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(s[j].deviation_outer_sum).eigenvalues().minCoeff(),
              -1e-12);
  }
}

TEST(TaylorProxy, AtTheCentroidAndByHand)
{
  auto model = logistic(200, 4);
  const Population pop = Population::of(model);
  TaylorVariates tv(model, pop, {0.7, std::nullopt, {}});
  Vector beta(4);
  beta << -0.2, 0.7, -0.4, 0.1;
  tv.set_theta(beta);
  const auto& sums = tv.summaries();
  for(std::size_t j = 0; j < sums.size(); ++j)
  {
    const auto d = model.data_derivatives(beta, sums[j].centroid);
    EXPECT_DOUBLE_EQ(taylor_proxy(sums[j].centroid, sums[j], d), d.value);
  }
  for(std::size_t pos = 0; pos < pop.size(); ++pos)
  {
    const auto& s = sums[tv.clusters().assignments[pos]];
    const Vector z = tv.points().row(static_cast<Eigen::Index>(pos)).transpose();
    const double q = taylor_by_hand(z, s.centroid, model.data_derivatives(beta, s.centroid));
    EXPECT_NEAR(tv.variate(pos), q, 1e-10 * std::max(1.0, std::abs(q)));
  }
}

TEST(TaylorProxy, QuadraticModelIsExact)
{
  Rng rng(5);
  NormalModel model(normal_vector(rng, 500, 3.0), 1.3);
  const Population pop = Population::of(model);
  TaylorVariates tv(model, pop, {0.6, std::nullopt, {}});
  Vector mu(1);
  mu << 0.4;
  tv.set_theta(mu);
  for(std::size_t k = 0; k < pop.size(); ++k)
    EXPECT_NEAR(tv.variate(k), model.contribution(mu, k), 1e-10);
  EXPECT_TRUE(near_relative(tv.total(), model.full_loglik(mu), 1e-10));
}

TEST(ProxyTotal, CompactEqualsBruteForce)
{
  auto model = logistic(1000, 6);
  const Population pop = Population::of(model);
  Rng rng(7);
  for(double eps : {0.3, 0.6, 1.0, 1.5, 2.5})
  {
    TaylorVariates tv(model, pop, {eps, std::nullopt, {}});
    for(int t = 0; t < 4; ++t)
    {
      const Vector beta = normal_vector(rng, 4, 0.7);
      tv.set_theta(beta);
      double brute = 0.0;
      for(std::size_t pos = 0; pos < pop.size(); ++pos)
      {
        const auto& s = tv.summaries()[tv.clusters().assignments[pos]];
        brute += taylor_by_hand(tv.points().row(static_cast<Eigen::Index>(pos)).transpose(), s.centroid,
                                model.data_derivatives(beta, s.centroid));
      }
      EXPECT_TRUE(near_relative(tv.total(), brute, 1e-10)) << eps << " " << tv.total() << " " << brute;
      EXPECT_EQ(tv.cost(), tv.clusters().clusters());
    }
  }
}

TEST(ProxyTotal, SingletonsGiveTheExactTotal)
{
  auto model = logistic(150, 8);
  const Population pop = Population::of(model);
  TaylorVariates tv(model, pop, {1e-9, std::nullopt, {}});
  Vector beta(4);
  beta << 0.1, -0.3, 0.2, 0.5;
  tv.set_theta(beta);
  double exact = 0.0;
  for(auto k : pop.members)
    exact += model.contribution(beta, k);
  EXPECT_TRUE(near_relative(tv.total(), exact, 1e-12));
}

TEST(ProxyTotal, ShrinkingEpsilonConverges)
{
  auto model = logistic(800, 9);
  const Population pop = Population::of(model);
  Vector beta(4);
  beta << -0.2, 0.6, -0.6, 0.3;
  double previous = std::numeric_limits<double>::infinity();
  for(double eps : {2.0, 1.0, 0.5, 0.25})
  {
    TaylorVariates tv(model, pop, {eps, std::nullopt, {}});
    tv.set_theta(beta);
    double worst = 0.0;
    for(std::size_t pos = 0; pos < pop.size(); ++pos)
      worst = std::max(worst, std::abs(tv.variate(pos) - model.contribution(beta, pop.members[pos])));
    EXPECT_LT(worst, previous);
    previous = worst;
  }
  EXPECT_LT(previous, 1e-2);
}

TEST(ProxyTotal, FixedHessianOption)
{
  Rng rng(10);
  NormalModel model(normal_vector(rng, 300), 1.0);
  const Population pop = Population::of(model);
  Vector at(1);
  at << 0.0;
  TaylorVariates tv(model, pop, {0.5, at, {}});
  Vector mu(1);
  mu << 0.7;
  tv.set_theta(mu);
  // The normal Hessian does not depend on theta.
  EXPECT_TRUE(near_relative(tv.total(), model.full_loglik(mu), 1e-10));
}

TEST(ProxyTotal, StatisticsDoNotDependOnTheta)
{
  auto model = logistic(300, 11);
  const Population pop = Population::of(model);
  TaylorVariates tv(model, pop, {0.9, std::nullopt, {}});
  const auto before = tv.summaries();
  Rng rng(12);
  for(int t = 0; t < 5; ++t)
    tv.set_theta(normal_vector(rng, 4));
  for(std::size_t j = 0; j < before.size(); ++j)
  {
    EXPECT_EQ(before[j].deviation_sum, tv.summaries()[j].deviation_sum);
    EXPECT_EQ(before[j].deviation_outer_sum, tv.summaries()[j].deviation_outer_sum);
  }
}

TEST(Sidecar, RoundTripAndKeyMismatch)
{
  auto model = logistic(300, 13);
  const Population pop = Population::of(model);
  const auto path = std::filesystem::temp_directory_path() / "submc_sidecar_test.bin";
  std::filesystem::remove(path);
  TaylorVariates first(model, pop, {0.8, std::nullopt, path});
  EXPECT_FALSE(first.loaded_from_sidecar());
  TaylorVariates second(model, pop, {0.8, std::nullopt, path});
  EXPECT_TRUE(second.loaded_from_sidecar());
  EXPECT_EQ(first.clusters().assignments, second.clusters().assignments);
  Vector beta = Vector::Constant(4, 0.1);
  first.set_theta(beta);
  second.set_theta(beta);
  EXPECT_EQ(first.total(), second.total());

  const auto key = clustering_key(first.points(), 0.8);
  EXPECT_TRUE(load_clustering(path, key).has_value());
  EXPECT_FALSE(load_clustering(path, clustering_key(first.points(), 0.81)).has_value());
  TaylorVariates third(model, pop, {0.5, std::nullopt, path});
  EXPECT_FALSE(third.loaded_from_sidecar());
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------

namespace
{

template <typename Family>
void check_against_finite_differences(const Family& family, const Vector& z, const Vector& beta,
                                      const std::function<double(const Vector&)>& l)
{
  Vector g;
  Matrix h;
  glm_data_gradient_hessian(z, beta, family, g, h);
  const double step = 1e-5;
  const Eigen::Index d = z.size();
  Vector g_fd(d);
  Matrix h_fd(d, d);
  for(Eigen::Index i = 0; i < d; ++i)
  {
    Vector zp = z, zm = z;
    zp[i] += step;
    zm[i] -= step;
    g_fd[i] = (l(zp) - l(zm)) / (2 * step);
    Vector gp, gm;
    Matrix hp, hm;
    glm_data_gradient_hessian(zp, beta, family, gp, hp);
    glm_data_gradient_hessian(zm, beta, family, gm, hm);
    h_fd.col(i) = (gp - gm) / (2 * step);
  }
  EXPECT_LE((g - g_fd).norm(), 1e-5 * std::max(1.0, g.norm()));
  EXPECT_LE((h - h_fd).norm(), 1e-5 * std::max(1.0, h.norm()));
  EXPECT_LE((h - h.transpose()).norm(), 1e-12);
}

} // namespace

TEST(GlmDerivatives, LogisticFiniteDifferences)
{
  Rng rng(14);
  LogisticFamily family;
  for(int t = 0; t < 100; ++t)
  {
    const Vector beta = normal_vector(rng, 3);
    Vector z(4);
    z << (t % 2 ? 1.0 : 0.0), normal_vector(rng, 3);
    auto l = [&](const Vector& v) { return logistic_contribution(v[0], v.tail(3).dot(beta)); };
    check_against_finite_differences(family, z, beta, l);
  }
}

TEST(GlmDerivatives, NormalFiniteDifferencesAndClosedForm)
{
  Rng rng(15);
  NormalFamily family{1.7};
  for(int t = 0; t < 100; ++t)
  {
    const Vector beta = normal_vector(rng, 2);
    Vector z(3);
    z << normal_vector(rng, 3);
    auto l = [&](const Vector& v) { return family.log_density(v[0], v.tail(2).dot(beta)); };
    check_against_finite_differences(family, z, beta, l);

    // l = -(y - x'b)^2 / (2 s2) + const: gradient and Hessian in closed form.
    Vector g;
    Matrix h;
    glm_data_gradient_hessian(z, beta, family, g, h);
    const double s2 = 1.7 * 1.7;
    const double r = z[0] - z.tail(2).dot(beta);
    Vector a(3);
    a << 1.0, -beta;
    EXPECT_LT((g - (-r / s2) * a).norm(), 1e-10);
    EXPECT_LT((h - (-1.0 / s2) * a * a.transpose()).norm(), 1e-10);
  }
}

TEST(GlmDerivatives, AgreesWithModelClosedForm)
{
  Rng rng(16);
  auto model = logistic(10, 17);
  LogisticFamily family;
  for(int t = 0; t < 50; ++t)
  {
    const Vector beta = normal_vector(rng, 4);
    Vector z(5);
    z << (t % 3 ? 0.0 : 1.0), normal_vector(rng, 4);
    Vector g;
    Matrix h;
    glm_data_gradient_hessian(z, beta, family, g, h);
    const auto d = model.data_derivatives(beta, z);
    EXPECT_LT((g - d.gradient).norm(), 1e-10 * std::max(1.0, g.norm()));
    EXPECT_LT((h - d.hessian).norm(), 1e-10 * std::max(1.0, h.norm()));
  }
}

TEST(GlmDerivatives, NumericDomain)
{
  LogisticFamily family;
  Vector z(2), beta(1);
  z << 1.0, 1.0;
  beta << 800.0;
  Vector g;
  Matrix h;
  try
  {
    glm_data_gradient_hessian(z, beta, family, g, h);
    FAIL();
  }
  catch(const Error& e)
  {
    EXPECT_EQ(e.code(), ErrorCode::numeric_domain);
  }
}
