#ifndef SUBMC_MODELS_HPP
#define SUBMC_MODELS_HPP

#include "submc/estimator.hpp"
#include "submc/types.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace submc
{

enum class CostModel
{
  evaluations,
  wall_time,
};

/// Value, data-space gradient and data-space Hessian of l(z; theta).
struct DataDerivatives
{
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// Contract every statistical model fulfils.
///
/// The log-likelihood decomposes as a sum of `size()` contributions. Models
/// that expose `has_data_derivatives()` describe each element by a point z_k in
/// data space and can evaluate l and its z-derivatives at arbitrary points,
/// which is what the centroid Taylor proxies need.
class Model
{
public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;

  virtual double contribution(const Vector& theta, std::size_t k) const = 0;
  virtual double log_prior(const Vector& theta) const = 0;

  /// Elements evaluated exactly in every iteration and never subsampled.
  virtual std::vector<std::size_t> always_evaluate() const { return {}; }

  virtual bool has_data_derivatives() const { return false; }
  virtual std::size_t data_dim() const { return 0; }
  virtual Vector data_point(std::size_t k) const;
  virtual DataDerivatives data_derivatives(const Vector& theta, const Vector& z) const;

  /// Throws unsupported_operation unless the model declares a split.
  virtual SignSplit sign_split(const Vector& theta, std::size_t k) const;
  virtual bool has_sign_split() const { return false; }

  /// Cheap, cruder evaluation of l_k (e.g. a coarse integration grid).
  virtual bool has_approximation() const { return false; }
  virtual double approximate_contribution(const Vector& theta, std::size_t k) const;

  virtual CostModel cost_model() const { return CostModel::evaluations; }

  /// Sum of all contributions in index order.
  virtual double full_loglik(const Vector& theta) const;
};

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticData
{
  Vector y;
  // One row per observation; the first column is usually the intercept.
  DataMatrix x;
};

double log_sigmoid(double a);

/// y log s(a) + (1 - y) log(1 - s(a)), s the logistic function, a = x'beta.
double logistic_contribution(double y, double linear_predictor);

/// Prior beta ~ N(0, prior_variance I).
class LogisticModel : public Model
{
public:
  explicit LogisticModel(LogisticData data, double prior_variance = 10.0);

  std::string name() const override { return "logistic"; }
  std::size_t size() const override { return static_cast<std::size_t>(data_.y.size()); }
  std::size_t dim() const override { return static_cast<std::size_t>(data_.x.cols()); }

  double contribution(const Vector& beta, std::size_t k) const override;
  double log_prior(const Vector& beta) const override;
  std::vector<std::size_t> always_evaluate() const override;

  bool has_data_derivatives() const override { return true; }
  std::size_t data_dim() const override { return dim() + 1; }
  Vector data_point(std::size_t k) const override;
  DataDerivatives data_derivatives(const Vector& beta, const Vector& z) const override;

  double full_loglik(const Vector& beta) const override;

  const LogisticData& data() const { return data_; }

private:
  LogisticData data_;
  double prior_variance_;
};

// ---------------------------------------------------------------------------
// AR(1) with Student-t errors

enum class ArParameterization
{
  standard,     // theta = (beta0, beta1)
  steady_state, // theta = (mu, rho)
};

struct ArWindow
{
  double current = 0.0;
  double lagged = 0.0;
};

/// Log density of a Student-t(nu) variate at `x`, normalizing constant included.
double student_t_log_density(double x, double nu);

double ar1_residual(const Vector& theta, const ArWindow& w, ArParameterization param);
double ar1_contribution(const Vector& theta, const ArWindow& w, ArParameterization param,
                        double nu);

/// Elements are the windows (y_t, y_{t-1}), t = 1..n-1 of a series of length n.
/// Prior Uniform(-5, 5) x Uniform(0, 1).
class Ar1Model : public Model
{
public:
  Ar1Model(Vector series, ArParameterization param, double nu = 5.0);

  std::string name() const override { return "ar1"; }
  std::size_t size() const override { return static_cast<std::size_t>(series_.size()) - 1; }
  std::size_t dim() const override { return 2; }

  double contribution(const Vector& theta, std::size_t k) const override;
  double log_prior(const Vector& theta) const override;

  bool has_data_derivatives() const override { return true; }
  std::size_t data_dim() const override { return 2; }
  Vector data_point(std::size_t k) const override;
  DataDerivatives data_derivatives(const Vector& theta, const Vector& z) const override;

  bool has_sign_split() const override { return true; }
  SignSplit sign_split(const Vector& theta, std::size_t k) const override;

  ArWindow window(std::size_t k) const { return {series_[k + 1], series_[k]}; }
  ArParameterization parameterization() const { return param_; }
  double nu() const { return nu_; }
  const Vector& series() const { return series_; }

private:
  Vector series_;
  ArParameterization param_;
  double nu_;
  double log_norm_;
};

// ---------------------------------------------------------------------------
// Normal location model with known scale; quadratic in the data.

class NormalModel : public Model
{
public:
  NormalModel(Vector y, double sigma, double prior_mean = 0.0, double prior_sd = 10.0);

  std::string name() const override { return "normal"; }
  std::size_t size() const override { return static_cast<std::size_t>(y_.size()); }
  std::size_t dim() const override { return 1; }

  double contribution(const Vector& theta, std::size_t k) const override;
  double log_prior(const Vector& theta) const override;

  bool has_data_derivatives() const override { return true; }
  std::size_t data_dim() const override { return 1; }
  Vector data_point(std::size_t k) const override;
  DataDerivatives data_derivatives(const Vector& theta, const Vector& z) const override;

  bool has_sign_split() const override { return true; }
  SignSplit sign_split(const Vector& theta, std::size_t k) const override;

  /// Closed-form posterior N(mean, variance) of the location.
  std::pair<double, double> posterior() const;

  const Vector& y() const { return y_; }
  double sigma() const { return sigma_; }

private:
  Vector y_;
  double sigma_;
  double prior_mean_;
  double prior_sd_;
};

} // namespace submc

#endif
