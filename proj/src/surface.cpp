#include "submc/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace submc
{

double thin_plate_radial(double r)
{
  if(r <= 0.0)
    return 0.0;
  return r * r * std::log(r);
}

DataMatrix kmeans_centers(const DataMatrix& points, std::size_t k, Rng& rng,
                          std::size_t max_iterations)
{
  const auto n = static_cast<std::size_t>(points.rows());
  if(n == 0)
    throw Error(ErrorCode::empty_population, "k-means needs at least one point");
  k = std::min(k, n);
  const Eigen::Index d = points.cols();
  DataMatrix centers(static_cast<Eigen::Index>(k), d);

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  centers.row(0) = points.row(static_cast<Eigen::Index>(pick(rng)));
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  for(std::size_t c = 1; c < k; ++c)
  {
    double total = 0.0;
    for(std::size_t i = 0; i < n; ++i)
    {
      const double d2 = (points.row(static_cast<Eigen::Index>(i)) -
                         centers.row(static_cast<Eigen::Index>(c - 1))).squaredNorm();
      dist[i] = std::min(dist[i], d2);
      total += dist[i];
    }
    std::size_t chosen = pick(rng);
    if(total > 0.0)
    {
      double r = unif(rng) * total;
      for(std::size_t i = 0; i < n; ++i)
      {
        r -= dist[i];
        if(r <= 0.0)
        {
          chosen = i;
          break;
        }
      }
    }
    centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(chosen));
  }

  std::vector<std::size_t> label(n, k);
  for(std::size_t it = 0; it < max_iterations; ++it)
  {
    bool changed = false;
    for(std::size_t i = 0; i < n; ++i)
    {
      Eigen::Index best = 0;
      (centers.rowwise() - points.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      if(label[i] != static_cast<std::size_t>(best))
      {
        label[i] = static_cast<std::size_t>(best);
        changed = true;
      }
    }
    if(!changed)
      break;
    DataMatrix sums = DataMatrix::Zero(static_cast<Eigen::Index>(k), d);
    std::vector<std::size_t> counts(k, 0);
    for(std::size_t i = 0; i < n; ++i)
    {
      sums.row(static_cast<Eigen::Index>(label[i])) += points.row(static_cast<Eigen::Index>(i));
      ++counts[label[i]];
    }
    for(std::size_t c = 0; c < k; ++c)
      if(counts[c] > 0)
        centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
  }
  return centers;
}

namespace
{

DataMatrix select_rows(const DataMatrix& points, const std::vector<std::size_t>& rows)
{
  DataMatrix out(static_cast<Eigen::Index>(rows.size()), points.cols());
  for(std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Vector select(const Vector& v, const std::vector<std::size_t>& rows)
{
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for(std::size_t i = 0; i < rows.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  return out;
}

// Intercept, linear terms and one radial function per knot.
Matrix thin_plate_design(const DataMatrix& z, const DataMatrix& knots)
{
  const Eigen::Index d = z.cols();
  Matrix b(z.rows(), 1 + d + knots.rows());
  for(Eigen::Index i = 0; i < z.rows(); ++i)
  {
    b(i, 0) = 1.0;
    b.row(i).segment(1, d) = z.row(i);
    for(Eigen::Index m = 0; m < knots.rows(); ++m)
      b(i, 1 + d + m) = thin_plate_radial((z.row(i) - knots.row(m)).norm());
  }
  return b;
}

Matrix squared_exponential(const DataMatrix& a, const DataMatrix& b, double lengthscale)
{
  Matrix k(a.rows(), b.rows());
  const double s = 0.5 / (lengthscale * lengthscale);
  for(Eigen::Index i = 0; i < a.rows(); ++i)
    for(Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = std::exp(-s * (a.row(i) - b.row(j)).squaredNorm());
  return k;
}

// Least-squares operator (B'B + lambda I)^{-1} B'; minimum-norm pseudo-inverse
// at lambda = 0. Returns false when lambda = 0 and B is rank deficient.
bool ridge_operator(const Matrix& b, double lambda, Matrix& op)
{
  if(lambda == 0.0)
  {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(b);
    if(cod.rank() < b.cols())
      return false;
    op = cod.pseudoInverse();
    return true;
  }
  Matrix gram = b.transpose() * b;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(gram);
  if(llt.info() != Eigen::Success)
    return false;
  op = llt.solve(b.transpose());
  return true;
}

std::vector<std::size_t> nearest_rows(const DataMatrix& from, const DataMatrix& to)
{
  std::vector<std::size_t> out(static_cast<std::size_t>(from.rows()));
  for(Eigen::Index i = 0; i < from.rows(); ++i)
  {
    Eigen::Index best = 0;
    (to.rowwise() - from.row(i)).rowwise().squaredNorm().minCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

} // namespace

SurfaceFit fit_surface(const DataMatrix& points, const std::vector<std::size_t>& training,
                       const Vector& values_at_mode, const SurfaceOptions& options)
{
  const auto n = static_cast<std::size_t>(points.rows());
  if(static_cast<std::size_t>(values_at_mode.size()) != n)
    throw Error(ErrorCode::invalid_params, "one reference value per point is required");
  if(training.empty())
    throw Error(ErrorCode::invalid_config, "surface fit needs training points");

  SurfaceFit fit;
  fit.method = options.method;
  fit.training = training;
  std::sort(fit.training.begin(), fit.training.end());
  fit.training.erase(std::unique(fit.training.begin(), fit.training.end()), fit.training.end());
  std::vector<char> in_training(n, 0);
  for(auto k : fit.training)
  {
    if(k >= n)
      throw Error(ErrorCode::invalid_config, "training index out of range");
    in_training[k] = 1;
  }
  for(std::size_t k = 0; k < n; ++k)
    if(!in_training[k])
      fit.holdout.push_back(k);
  fit.residual_adjustment = options.residual_adjustment;

  const DataMatrix zv = select_rows(points, fit.training);
  const DataMatrix zh = select_rows(points, fit.holdout);
  const Vector lv = select(values_at_mode, fit.training);
  const Vector lh = select(values_at_mode, fit.holdout);
  if(fit.residual_adjustment)
    fit.nearest_training = nearest_rows(zh, zv);

  auto holdout_error = [&](const SurfaceFit& f)
  {
    if(fit.holdout.empty())
      return 0.0;
    return (predict_surface(f, lv) - lh).norm();
  };

  double best_error = std::numeric_limits<double>::infinity();
  SurfaceFit best;

  if(options.method == SurfaceMethod::thin_plate)
  {
    if(options.lambda_grid.empty())
      throw Error(ErrorCode::invalid_config, "lambda grid is empty");
    Rng rng = make_stream(options.seed, 0x6b6d);
    fit.knots = kmeans_centers(zv, options.knots, rng);
    const Matrix bv = thin_plate_design(zv, fit.knots);
    fit.prediction_matrix = thin_plate_design(zh, fit.knots);
    fit.training_matrix = bv;

    std::vector<double> grid = options.lambda_grid;
    std::sort(grid.begin(), grid.end());
    for(double lambda : grid)
    {
      if(lambda < 0.0)
        throw Error(ErrorCode::invalid_config, "lambda must be non-negative");
      SurfaceFit candidate = fit;
      if(!ridge_operator(bv, lambda, candidate.solve_operator))
      {
        // Singular at lambda = 0: the next (smallest positive) grid value takes over.
        fit.fell_back = true;
        continue;
      }
      candidate.lambda = lambda;
      const double err = holdout_error(candidate);
      if(err < best_error)
      {
        best_error = err;
        best = std::move(candidate);
      }
    }
    if(!std::isfinite(best_error))
      throw Error(ErrorCode::factorization, "thin-plate system singular for every lambda");
    best.fell_back = fit.fell_back;
  }
  else
  {
    if(options.lengthscale_grid.empty())
      throw Error(ErrorCode::invalid_config, "length-scale grid is empty");
    for(double ell : options.lengthscale_grid)
    {
      if(!(ell > 0.0))
        throw Error(ErrorCode::invalid_config, "length scales must be positive");
      SurfaceFit candidate = fit;
      Matrix k = squared_exponential(zv, zv, ell);
      Eigen::LLT<Matrix> llt(k);
      if(llt.info() != Eigen::Success)
      {
        candidate.jitter = 1e-8 * k.diagonal().mean();
        k.diagonal().array() += candidate.jitter;
        llt.compute(k);
        if(llt.info() != Eigen::Success)
          continue;
      }
      candidate.lengthscale = ell;
      candidate.solve_operator = llt.solve(Matrix::Identity(k.rows(), k.cols()));
      candidate.prediction_matrix = squared_exponential(zh, zv, ell);
      candidate.training_matrix = k;
      const double err = holdout_error(candidate);
      if(err < best_error)
      {
        best_error = err;
        best = std::move(candidate);
      }
    }
    if(!std::isfinite(best_error))
      throw Error(ErrorCode::factorization, "GP kernel matrix singular for every length scale");
  }
  best.holdout_error = best_error;
  return best;
}

Vector predict_surface(const SurfaceFit& fit, const Vector& loglik_train)
{
  if(static_cast<std::size_t>(loglik_train.size()) != fit.training.size())
    throw Error(ErrorCode::invalid_params, "one training value per training point is required");
  const Vector coef = fit.solve_operator * loglik_train;
  Vector pred = fit.prediction_matrix * coef;
  if(fit.residual_adjustment)
  {
    const Vector residual = loglik_train - fit.training_matrix * coef;
    for(std::size_t i = 0; i < fit.nearest_training.size(); ++i)
      pred[static_cast<Eigen::Index>(i)] += residual[static_cast<Eigen::Index>(fit.nearest_training[i])];
  }
  return pred;
}

} // namespace submc
