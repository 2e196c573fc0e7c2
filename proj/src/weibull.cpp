#include "submc/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace submc
{

void validate_panel(const SubjectPanel& panel)
{
  const std::string who = "subject " + std::to_string(panel.id);
  const std::size_t n = panel.y.size();
  if(n == 0)
    throw Error(ErrorCode::invalid_panel, who + " has no periods");
  if(panel.t_start.size() != n || panel.t_end.size() != n ||
     static_cast<std::size_t>(panel.x.rows()) != n)
    throw Error(ErrorCode::invalid_panel, who + ": period arrays differ in length");
  for(std::size_t j = 0; j < n; ++j)
  {
    if(!(panel.t_start[j] >= 0.0) || !(panel.t_end[j] > panel.t_start[j]))
      throw Error(ErrorCode::invalid_panel,
                  who + ": period " + std::to_string(j) + " has non-increasing times");
    if(j > 0 && panel.t_start[j] < panel.t_end[j - 1])
      throw Error(ErrorCode::invalid_panel,
                  who + ": period " + std::to_string(j) + " starts before the previous one ends");
    if(panel.y[j] != 0.0 && panel.y[j] != 1.0)
      throw Error(ErrorCode::invalid_panel, who + ": responses must be 0 or 1");
  }
}

double weibull_subject_contribution(const Vector& theta, const SubjectPanel& panel,
                                    const WeibullGrid& grid)
{
  const Eigen::Index p = panel.x.cols();
  if(theta.size() != 2 * p + 1)
    throw Error(ErrorCode::invalid_params, "Weibull parameter must have 2p + 1 entries");
  if(!(grid.step > 0.0) || !(grid.halfwidth > 0.0))
    throw Error(ErrorCode::invalid_config, "integration step and half-width must be positive");

  const auto beta_lambda = theta.head(p);
  const auto beta_rho = theta.segment(p, p);
  const double tau = std::exp(0.5 * theta[2 * p]);

  // Per period: c_j = exp(x' beta_lambda) (t_end^rho - t_start^rho), so that
  // lambda_j Delta_j = exp(gamma) c_j.
  const std::size_t periods = panel.periods();
  std::vector<double> c(periods);
  for(std::size_t j = 0; j < periods; ++j)
  {
    const auto row = panel.x.row(static_cast<Eigen::Index>(j));
    const double rho = std::exp(row.dot(beta_rho));
    const double delta = std::pow(panel.t_end[j], rho) - std::pow(panel.t_start[j], rho);
    c[j] = std::exp(row.dot(beta_lambda)) * delta;
  }

  const auto intervals = static_cast<std::size_t>(
    std::max(1.0, std::ceil(2.0 * grid.halfwidth / grid.step - 1e-9)));
  const double spacing = 2.0 * grid.halfwidth * tau / static_cast<double>(intervals);
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(tau);

  // Streaming log-sum-exp over the trapezoid nodes.
  double running_max = -std::numeric_limits<double>::infinity();
  double scaled_sum = 0.0;
  for(std::size_t i = 0; i <= intervals; ++i)
  {
    const double gamma = -grid.halfwidth * tau + static_cast<double>(i) * spacing;
    const double eg = std::exp(gamma);
    double log_f = log_norm - 0.5 * (gamma / tau) * (gamma / tau);
    for(std::size_t j = 0; j < periods; ++j)
    {
      const double rate = eg * c[j];
      if(panel.y[j] == 1.0)
        log_f -= rate;
      else
        log_f += std::log(-std::expm1(-rate));
    }
    if(i == 0 || i == intervals)
      log_f -= std::numbers::ln2;

    if(log_f > running_max)
    {
      scaled_sum = scaled_sum * std::exp(running_max - log_f) + 1.0;
      running_max = log_f;
    }
    else
      scaled_sum += std::exp(log_f - running_max);
  }
  return running_max + std::log(scaled_sum) + std::log(spacing);
}

WeibullModel::WeibullModel(std::vector<SubjectPanel> subjects, WeibullGrid exact,
                           WeibullGrid coarse, double prior_variance)
  : subjects_(std::move(subjects)), exact_(exact), coarse_(coarse),
    prior_variance_(prior_variance)
{
  if(subjects_.empty())
    throw Error(ErrorCode::empty_population, "survival data has no subjects");
  covariates_ = static_cast<std::size_t>(subjects_.front().x.cols());
  for(const auto& s : subjects_)
  {
    validate_panel(s);
    if(static_cast<std::size_t>(s.x.cols()) != covariates_)
      throw Error(ErrorCode::invalid_panel,
                  "subject " + std::to_string(s.id) + " has a different covariate count");
  }
}

double WeibullModel::contribution(const Vector& theta, std::size_t k) const
{
  return weibull_subject_contribution(theta, subjects_[k], exact_);
}

double WeibullModel::approximate_contribution(const Vector& theta, std::size_t k) const
{
  return weibull_subject_contribution(theta, subjects_[k], coarse_);
}

double WeibullModel::log_prior(const Vector& theta) const
{
  const double p = static_cast<double>(theta.size());
  return -0.5 * theta.squaredNorm() / prior_variance_ -
         0.5 * p * std::log(2.0 * std::numbers::pi * prior_variance_);
}

} // namespace submc
