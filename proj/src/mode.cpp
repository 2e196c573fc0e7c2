#include "submc/mode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace submc
{

namespace
{

double step_for(double x, double relative)
{
  return relative * std::max(1.0, std::abs(x));
}

double scaled_gradient(const Vector& g, const Vector& x, double f)
{
  double worst = 0.0;
  for(Eigen::Index i = 0; i < g.size(); ++i)
    worst = std::max(worst, std::abs(g[i]) * std::max(1.0, std::abs(x[i])));
  return worst / std::max(1.0, std::abs(f));
}

} // namespace

Vector numeric_gradient(const LogDensity& f, const Vector& x)
{
  Vector g(x.size());
  Vector probe = x;
  for(Eigen::Index i = 0; i < x.size(); ++i)
  {
    const double h = step_for(x[i], 1e-5);
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Matrix numeric_hessian(const LogDensity& f, const Vector& x)
{
  const Eigen::Index d = x.size();
  Matrix h(d, d);
  Vector step(d);
  for(Eigen::Index i = 0; i < d; ++i)
    step[i] = step_for(x[i], 1e-3);
  const double f0 = f(x);
  Vector probe = x;
  for(Eigen::Index i = 0; i < d; ++i)
  {
    probe[i] = x[i] + step[i];
    const double up = f(probe);
    probe[i] = x[i] - step[i];
    const double down = f(probe);
    probe[i] = x[i];
    h(i, i) = (up - 2.0 * f0 + down) / (step[i] * step[i]);
    for(Eigen::Index j = 0; j < i; ++j)
    {
      auto at = [&](double si, double sj)
      {
        probe[i] = x[i] + si * step[i];
        probe[j] = x[j] + sj * step[j];
        const double v = f(probe);
        probe[i] = x[i];
        probe[j] = x[j];
        return v;
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * step[i] * step[j]);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

ModeResult find_mode_and_curvature(const LogDensity& log_post, const Vector& init,
                                   const ModeOptions& options)
{
  // Minimise the negative log density.
  auto f = [&log_post](const Vector& x)
  {
    const double v = -log_post(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  const Eigen::Index d = init.size();
  Vector x = init;
  double fx = f(x);
  if(!std::isfinite(fx))
    throw Error(ErrorCode::invalid_params, "log posterior is not finite at the starting point");
  Vector g = -numeric_gradient(log_post, x);
  Matrix hinv = Matrix::Identity(d, d);
  bool fresh = true;

  ModeResult out;
  std::size_t it = 0;
  for(; it < options.max_iterations; ++it)
  {
    if(scaled_gradient(g, x, fx) <= options.gradient_tolerance)
      break;
    Vector dir = -hinv * g;
    if(!(g.dot(dir) < 0.0))
    {
      hinv.setIdentity();
      fresh = true;
      dir = -g;
    }

    double t = 1.0;
    double f_new = f(x + dir);
    const double slope = g.dot(dir);
    while(!(f_new <= fx + 1e-4 * t * slope) && t > 1e-20)
    {
      t *= 0.5;
      f_new = f(x + t * dir);
    }
    if(!(f_new <= fx + 1e-4 * t * slope))
    {
      if(!fresh)
      {
        hinv.setIdentity();
        fresh = true;
        continue;
      }
      break;
    }

    const Vector s = t * dir;
    const Vector x_new = x + s;
    const Vector g_new = -numeric_gradient(log_post, x_new);
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if(sy > 1e-12 * s.norm() * y.norm())
    {
      if(fresh)
      {
        hinv *= sy / y.squaredNorm();
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Matrix ident = Matrix::Identity(d, d);
      hinv = (ident - rho * s * y.transpose()) * hinv * (ident - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }

  out.theta = x;
  out.log_density = -fx;
  out.iterations = it;
  out.scaled_gradient = scaled_gradient(g, x, fx);
  if(out.scaled_gradient > options.gradient_tolerance)
    throw NonConvergence("mode search stopped after " + std::to_string(it) +
                           " iterations with scaled gradient " +
                           std::to_string(out.scaled_gradient),
                         x);

  const Matrix neg_h = -numeric_hessian(log_post, x);
  Eigen::LLT<Matrix> llt(neg_h);
  if(llt.info() != Eigen::Success)
    throw Error(ErrorCode::factorization, "negative Hessian at the mode is not positive definite");
  out.covariance = llt.solve(Matrix::Identity(d, d));
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

} // namespace submc
