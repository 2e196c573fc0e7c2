#ifndef SUBMC_SURFACE_HPP
#define SUBMC_SURFACE_HPP

#include "submc/types.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace submc
{

enum class SurfaceMethod
{
  thin_plate,
  gaussian_process,
};

struct SurfaceOptions
{
  SurfaceMethod method = SurfaceMethod::thin_plate;
  // Thin-plate knots, chosen by k-means over the training points.
  std::size_t knots = 50;
  std::vector<double> lambda_grid{0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0};
  // GP length scales in standardized units; sigma_f cancels in the
  // noise-free predictive mean and is fixed at 1.
  std::vector<double> lengthscale_grid{0.25, 0.5, 1.0, 2.0, 4.0};
  bool residual_adjustment = false;
  std::uint64_t seed = 1;
};

/// r^2 log r with the removable singularity at 0 filled in.
double thin_plate_radial(double r);

/// Lloyd's algorithm with k-means++ seeding.
DataMatrix kmeans_centers(const DataMatrix& points, std::size_t k, Rng& rng,
                          std::size_t max_iterations = 100);

/// A fixed linear predictor of held-out contributions from training ones.
struct SurfaceFit
{
  SurfaceMethod method = SurfaceMethod::thin_plate;
  std::vector<std::size_t> training;
  std::vector<std::size_t> holdout;
  // coefficients = solve_operator * l_V, predictions = prediction_matrix * coefficients.
  Matrix solve_operator;
  Matrix prediction_matrix;
  // Fitted values at the training points, for the residual adjustment.
  Matrix training_matrix;
  std::vector<std::size_t> nearest_training;
  bool residual_adjustment = false;

  DataMatrix knots;
  double lambda = 0.0;
  double lengthscale = 0.0;
  double jitter = 0.0;
  bool fell_back = false;
  double holdout_error = 0.0;
};

/// Fits on `training` (positions into `points`, standardized) using values
/// at a reference parameter for all points, choosing the hyperparameter that
/// minimises the holdout prediction error. Holdout = all other points.
SurfaceFit fit_surface(const DataMatrix& points, const std::vector<std::size_t>& training,
                       const Vector& values_at_mode, const SurfaceOptions& options);

/// Predictions for the holdout points, in `fit.holdout` order.
Vector predict_surface(const SurfaceFit& fit, const Vector& loglik_train);

} // namespace submc

#endif
