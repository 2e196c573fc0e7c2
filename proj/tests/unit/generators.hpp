#ifndef SUBMC_TEST_GENERATORS_HPP
#define SUBMC_TEST_GENERATORS_HPP

// Small random-input generators for property tests.

#include "submc/types.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace submc::testing
{

inline double uniform(Rng& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t integer(Rng& rng, std::size_t lo, std::size_t hi)
{
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline std::vector<double> values(Rng& rng, std::size_t n, double lo, double hi)
{
  std::vector<double> v(n);
  for(auto& x : v)
    x = uniform(rng, lo, hi);
  return v;
}

inline Vector normal_vector(Rng& rng, std::size_t n, double sd = 1.0)
{
  std::normal_distribution<double> z(0.0, sd);
  Vector v(static_cast<Eigen::Index>(n));
  for(Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = z(rng);
  return v;
}

inline DataMatrix normal_points(Rng& rng, std::size_t n, std::size_t d)
{
  std::normal_distribution<double> z(0.0, 1.0);
  DataMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for(Eigen::Index i = 0; i < x.rows(); ++i)
    for(Eigen::Index j = 0; j < x.cols(); ++j)
      x(i, j) = z(rng);
  return x;
}

/// Random symmetric positive definite matrix.
inline Matrix spd_matrix(Rng& rng, std::size_t d)
{
  DataMatrix a = normal_points(rng, d, d);
  Matrix m = a * a.transpose();
  m += static_cast<double>(d) * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  return m;
}

inline bool near_relative(double a, double b, double tol)
{
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace submc::testing

#endif
