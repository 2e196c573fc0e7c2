#ifndef SUBMC_MODE_HPP
#define SUBMC_MODE_HPP

#include "submc/types.hpp"

#include <cstddef>
#include <functional>

namespace submc
{

struct ModeOptions
{
  std::size_t max_iterations = 500;
  // Bound on max_i |g_i| max(|theta_i|, 1) / max(|f|, 1).
  double gradient_tolerance = 1e-6;
};

struct ModeResult
{
  Vector theta;
  Matrix covariance;
  double log_density = 0.0;
  std::size_t iterations = 0;
  double scaled_gradient = 0.0;
};

using LogDensity = std::function<double(const Vector&)>;

/// Central finite-difference gradient.
Vector numeric_gradient(const LogDensity& f, const Vector& x);

/// Central finite-difference Hessian from function values.
Matrix numeric_hessian(const LogDensity& f, const Vector& x);

/// BFGS ascent on a log-density followed by Sigma = (-H)^{-1} at the mode.
/// Throws NonConvergence with the best iterate after max_iterations.
ModeResult find_mode_and_curvature(const LogDensity& log_post, const Vector& init,
                                   const ModeOptions& options = {});

} // namespace submc

#endif
