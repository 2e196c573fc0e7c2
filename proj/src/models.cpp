#include "submc/models.hpp"


#include <cmath>
#include <limits>
#include <numbers>

namespace submc
{

Vector Model::data_point(std::size_t) const
{
  throw Error(ErrorCode::unsupported_operation, name() + " has no data-space representation");
}

DataDerivatives Model::data_derivatives(const Vector&, const Vector&) const
{
  throw Error(ErrorCode::unsupported_operation, name() + " has no data-space derivatives");
}

SignSplit Model::sign_split(const Vector&, std::size_t) const
{
  throw Error(ErrorCode::unsupported_operation, name() + " declares no sign split");
}

double Model::approximate_contribution(const Vector&, std::size_t) const
{
  throw Error(ErrorCode::unsupported_operation, name() + " has no cheap approximation");
}

double Model::full_loglik(const Vector& theta) const
{
  double total = 0.0;
  for(std::size_t k = 0; k < size(); ++k)
    total += contribution(theta, k);
  return total;
}

// ---------------------------------------------------------------------------

double log_sigmoid(double a)
{
  if(a >= 0.0)
    return -std::log1p(std::exp(-a));
  return a - std::log1p(std::exp(a));
}

double logistic_contribution(double y, double a)
{
  return y * log_sigmoid(a) + (1.0 - y) * log_sigmoid(-a);
}

LogisticModel::LogisticModel(LogisticData data, double prior_variance)
  : data_(std::move(data)), prior_variance_(prior_variance)
{
  if(data_.x.rows() != data_.y.size())
    throw Error(ErrorCode::invalid_config, "logistic data: x and y row counts differ");
  if(data_.y.size() == 0)
    throw Error(ErrorCode::empty_population, "logistic data is empty");
}

double LogisticModel::contribution(const Vector& beta, std::size_t k) const
{
  const auto i = static_cast<Eigen::Index>(k);
  return logistic_contribution(data_.y[i], data_.x.row(i).dot(beta));
}

double LogisticModel::log_prior(const Vector& beta) const
{
  const double p = static_cast<double>(beta.size());
  return -0.5 * beta.squaredNorm() / prior_variance_ -
         0.5 * p * std::log(2.0 * std::numbers::pi * prior_variance_);
}

std::vector<std::size_t> LogisticModel::always_evaluate() const
{
  std::vector<std::size_t> ones;
  for(Eigen::Index i = 0; i < data_.y.size(); ++i)
    if(data_.y[i] == 1.0)
      ones.push_back(static_cast<std::size_t>(i));
  return ones;
}

Vector LogisticModel::data_point(std::size_t k) const
{
  const auto i = static_cast<Eigen::Index>(k);
  Vector z(data_.x.cols() + 1);
  z(0) = data_.y[i];
  z.tail(data_.x.cols()) = data_.x.row(i).transpose();
  return z;
}

DataDerivatives LogisticModel::data_derivatives(const Vector& beta, const Vector& z) const
{
  // Closed form of the logistic GLM: l = y a + log s(-a), a = x' beta.
  const Eigen::Index p = beta.size();
  const double y = z(0);
  const double a = z.tail(p).dot(beta);
  const double s = 1.0 / (1.0 + std::exp(-a));

  DataDerivatives d;
  d.value = logistic_contribution(y, a);
  d.gradient.resize(p + 1);
  d.gradient(0) = a;
  d.gradient.tail(p) = (y - s) * beta;
  d.hessian.setZero(p + 1, p + 1);
  d.hessian.block(1, 0, p, 1) = beta;
  d.hessian.block(0, 1, 1, p) = beta.transpose();
  d.hessian.bottomRightCorner(p, p) = -s * (1.0 - s) * (beta * beta.transpose());
  return d;
}

double LogisticModel::full_loglik(const Vector& beta) const
{
  const Vector a = data_.x * beta;
  double total = 0.0;
  for(Eigen::Index i = 0; i < a.size(); ++i)
    total += logistic_contribution(data_.y[i], a[i]);
  return total;
}

// ---------------------------------------------------------------------------

double student_t_log_density(double x, double nu)
{
  const double log_norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                          0.5 * std::log(nu * std::numbers::pi);
  return log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double ar1_residual(const Vector& theta, const ArWindow& w, ArParameterization param)
{
  if(param == ArParameterization::standard)
    return w.current - theta[0] - theta[1] * w.lagged;
  return w.current - theta[0] - theta[1] * (w.lagged - theta[0]);
}

double ar1_contribution(const Vector& theta, const ArWindow& w, ArParameterization param,
                        double nu)
{
  return student_t_log_density(ar1_residual(theta, w, param), nu);
}

Ar1Model::Ar1Model(Vector series, ArParameterization param, double nu)
  : series_(std::move(series)), param_(param), nu_(nu)
{
  if(series_.size() < 2)
    throw Error(ErrorCode::empty_population, "AR(1) series needs at least 2 values");
  if(!(nu_ > 0.0))
    throw Error(ErrorCode::invalid_config, "degrees of freedom must be positive");
  log_norm_ = std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_) -
              0.5 * std::log(nu_ * std::numbers::pi);
}

double Ar1Model::contribution(const Vector& theta, std::size_t k) const
{
  const double e = ar1_residual(theta, window(k), param_);
  return log_norm_ - 0.5 * (nu_ + 1.0) * std::log1p(e * e / nu_);
}

double Ar1Model::log_prior(const Vector& theta) const
{
  if(theta.size() != 2)
    throw Error(ErrorCode::invalid_params, "AR(1) parameter has two entries");
  if(theta[0] < -5.0 || theta[0] > 5.0 || theta[1] < 0.0 || theta[1] > 1.0)
    return -std::numeric_limits<double>::infinity();
  return -std::log(10.0);
}

Vector Ar1Model::data_point(std::size_t k) const
{
  Vector z(2);
  z << series_[static_cast<Eigen::Index>(k) + 1], series_[static_cast<Eigen::Index>(k)];
  return z;
}

DataDerivatives Ar1Model::data_derivatives(const Vector& theta, const Vector& z) const
{
  const ArWindow w{z(0), z(1)};
  const double e = ar1_residual(theta, w, param_);
  const double denom = nu_ + e * e;
  const double dl_de = -(nu_ + 1.0) * e / denom;
  const double d2l_de2 = -(nu_ + 1.0) * (nu_ - e * e) / (denom * denom);

  Vector de_dz(2);
  de_dz << 1.0, -theta[1];

  DataDerivatives d;
  d.value = log_norm_ - 0.5 * (nu_ + 1.0) * std::log1p(e * e / nu_);
  d.gradient = dl_de * de_dz;
  d.hessian = d2l_de2 * (de_dz * de_dz.transpose());
  return d;
}

SignSplit Ar1Model::sign_split(const Vector& theta, std::size_t k) const
{
  const double e = ar1_residual(theta, window(k), param_);
  return {-0.5 * (nu_ + 1.0) * std::log1p(e * e / nu_), log_norm_};
}

// ---------------------------------------------------------------------------

NormalModel::NormalModel(Vector y, double sigma, double prior_mean, double prior_sd)
  : y_(std::move(y)), sigma_(sigma), prior_mean_(prior_mean), prior_sd_(prior_sd)
{
  if(y_.size() == 0)
    throw Error(ErrorCode::empty_population, "normal data is empty");
  if(!(sigma_ > 0.0) || !(prior_sd_ > 0.0))
    throw Error(ErrorCode::invalid_config, "normal model scales must be positive");
}

double NormalModel::contribution(const Vector& theta, std::size_t k) const
{
  const double r = y_[static_cast<Eigen::Index>(k)] - theta[0];
  return -0.5 * r * r / (sigma_ * sigma_) -
         0.5 * std::log(2.0 * std::numbers::pi * sigma_ * sigma_);
}

double NormalModel::log_prior(const Vector& theta) const
{
  const double r = (theta[0] - prior_mean_) / prior_sd_;
  return -0.5 * r * r - std::log(prior_sd_ * std::sqrt(2.0 * std::numbers::pi));
}

Vector NormalModel::data_point(std::size_t k) const
{
  return Vector::Constant(1, y_[static_cast<Eigen::Index>(k)]);
}

DataDerivatives NormalModel::data_derivatives(const Vector& theta, const Vector& z) const
{
  const double s2 = sigma_ * sigma_;
  const double r = z(0) - theta[0];
  DataDerivatives d;
  d.value = -0.5 * r * r / s2 - 0.5 * std::log(2.0 * std::numbers::pi * s2);
  d.gradient = Vector::Constant(1, -r / s2);
  d.hessian = Matrix::Constant(1, 1, -1.0 / s2);
  return d;
}

SignSplit NormalModel::sign_split(const Vector& theta, std::size_t k) const
{
  const double s2 = sigma_ * sigma_;
  const double r = y_[static_cast<Eigen::Index>(k)] - theta[0];
  return {-0.5 * r * r / s2, -0.5 * std::log(2.0 * std::numbers::pi * s2)};
}

std::pair<double, double> NormalModel::posterior() const
{
  const double n = static_cast<double>(y_.size());
  const double precision = 1.0 / (prior_sd_ * prior_sd_) + n / (sigma_ * sigma_);
  const double mean =
    (prior_mean_ / (prior_sd_ * prior_sd_) + y_.sum() / (sigma_ * sigma_)) / precision;
  return {mean, 1.0 / precision};
}

} // namespace submc
