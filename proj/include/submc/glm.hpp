#ifndef SUBMC_GLM_HPP
#define SUBMC_GLM_HPP

#include "submc/types.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace submc
{

/// Data-space derivatives of a GLM log density
///
///   l(z) = log h(y) + log g(t) + b(t) T(y),   t = k^{-1}(x' beta),
///
/// with z = (y, x). `Family` supplies h, g, b, T, the inverse link and their
/// first and second derivatives as member functions
/// (h, dh, d2h, g, dg, d2g, b, db, d2b, T, dT, d2T, kinv, dkinv, d2kinv).
template <typename Family, typename DerivedZ, typename DerivedB>
void glm_data_gradient_hessian(const Eigen::MatrixBase<DerivedZ>& z,
                               const Eigen::MatrixBase<DerivedB>& beta, const Family& family,
                               Vector& gradient, Matrix& hessian)
{
  using Scalar = typename DerivedZ::Scalar;
  const Eigen::Index p = beta.size();
  if(z.size() != p + 1)
    throw Error(ErrorCode::invalid_params, "GLM data point must have dim(beta) + 1 entries");

  const Scalar y = z(0);
  const Scalar a = z.tail(p).dot(beta);
  const Scalar t = family.kinv(a);
  const Scalar k1 = family.dkinv(a);
  const Scalar k2 = family.d2kinv(a);

  const Scalar h = family.h(y);
  const Scalar g = family.g(t);
  if(!(h > 0) || !(g > 0) || !std::isfinite(h) || !std::isfinite(g))
    throw Error(ErrorCode::numeric_domain,
                "GLM derivative undefined: h(y) or g(theta) is not positive at a = " +
                  std::to_string(static_cast<double>(a)));

  const Scalar dlogh = family.dh(y) / h;
  const Scalar d2logh = family.d2h(y) / h - dlogh * dlogh;
  const Scalar dlogg = family.dg(t) / g;
  const Scalar d2logg = family.d2g(t) / g - dlogg * dlogg;
  const Scalar b = family.b(t);
  const Scalar b1 = family.db(t);
  const Scalar b2 = family.d2b(t);
  const Scalar T = family.T(y);
  const Scalar T1 = family.dT(y);
  const Scalar T2 = family.d2T(y);

  // d l / d a with a = x' beta, and its derivative in a.
  const Scalar dl_da = (dlogg + b1 * T) * k1;
  const Scalar d2l_da2 = (d2logg + b2 * T) * k1 * k1 + (dlogg + b1 * T) * k2;

  gradient.resize(p + 1);
  gradient(0) = dlogh + b * T1;
  gradient.tail(p) = dl_da * beta;

  hessian.resize(p + 1, p + 1);
  hessian(0, 0) = d2logh + b * T2;
  const Vector cross = (b1 * k1 * T1) * beta;
  hessian.block(1, 0, p, 1) = cross;
  hessian.block(0, 1, 1, p) = cross.transpose();
  hessian.bottomRightCorner(p, p) = d2l_da2 * (beta * beta.transpose());
}

/// Bernoulli response with logit link: h = 1, g = 1 - t, b = logit(t), T = y.
struct LogisticFamily
{
  double h(double) const { return 1.0; }
  double dh(double) const { return 0.0; }
  double d2h(double) const { return 0.0; }
  double g(double t) const { return 1.0 - t; }
  double dg(double) const { return -1.0; }
  double d2g(double) const { return 0.0; }
  double b(double t) const { return std::log(t / (1.0 - t)); }
  double db(double t) const { return 1.0 / (t * (1.0 - t)); }
  double d2b(double t) const { return (2.0 * t - 1.0) / (t * t * (1.0 - t) * (1.0 - t)); }
  double T(double y) const { return y; }
  double dT(double) const { return 1.0; }
  double d2T(double) const { return 0.0; }
  double kinv(double a) const { return 1.0 / (1.0 + std::exp(-a)); }
  double dkinv(double a) const
  {
    const double s = kinv(a);
    return s * (1.0 - s);
  }
  double d2kinv(double a) const
  {
    const double s = kinv(a);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  }
};

/// Normal response with known sigma and identity link.
struct NormalFamily
{
  double sigma = 1.0;

  double s2() const { return sigma * sigma; }
  double h(double y) const { return std::exp(-0.5 * y * y / s2()) / std::sqrt(2.0 * std::numbers::pi * s2()); }
  double dh(double y) const { return -y / s2() * h(y); }
  double d2h(double y) const { return (y * y / (s2() * s2()) - 1.0 / s2()) * h(y); }
  double g(double t) const { return std::exp(-0.5 * t * t / s2()); }
  double dg(double t) const { return -t / s2() * g(t); }
  double d2g(double t) const { return (t * t / (s2() * s2()) - 1.0 / s2()) * g(t); }
  double b(double t) const { return t / s2(); }
  double db(double) const { return 1.0 / s2(); }
  double d2b(double) const { return 0.0; }
  double T(double y) const { return y; }
  double dT(double) const { return 1.0; }
  double d2T(double) const { return 0.0; }
  double kinv(double a) const { return a; }
  double dkinv(double) const { return 1.0; }
  double d2kinv(double) const { return 0.0; }

  double log_density(double y, double mean) const
  {
    const double r = y - mean;
    return -0.5 * r * r / s2() - 0.5 * std::log(2.0 * std::numbers::pi * s2());
  }
};

} // namespace submc

#endif
