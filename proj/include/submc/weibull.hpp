#ifndef SUBMC_WEIBULL_HPP
#define SUBMC_WEIBULL_HPP

#include "submc/models.hpp"

#include <cstddef>
#include <vector>

namespace submc
{

/// Periods of one subject. Row j of `x` holds the covariates of period j;
/// the period covers (t_start[j], t_end[j]].
struct SubjectPanel
{
  std::size_t id = 0;
  std::vector<double> t_start;
  std::vector<double> t_end;
  std::vector<double> y;
  DataMatrix x;

  std::size_t periods() const { return y.size(); }
};

/// Throws invalid_panel for empty panels, mismatched lengths, negative times
/// or periods that are not increasing and non-overlapping.
void validate_panel(const SubjectPanel& panel);

struct WeibullGrid
{
  double step = 0.01;
  double halfwidth = 6.0;
};

/// Log of the subject's marginal likelihood
///
///   int prod_j p(y_ij | gamma) N(gamma; 0, tau^2) d gamma
///
/// by the trapezoidal rule on [-W tau, W tau] with spacing h tau, where
/// p(y = 1 | gamma) = exp(-lambda (t_end^rho - t_start^rho)),
/// log lambda = gamma + x' beta_lambda, log rho = x' beta_rho and
/// theta = (beta_lambda, beta_rho, log tau^2).
double weibull_subject_contribution(const Vector& theta, const SubjectPanel& panel,
                                    const WeibullGrid& grid);

/// Discrete-time Weibull survival with a normal random intercept per subject.
/// Subjects are the population elements. The exact contribution uses the
/// fine grid, the approximation the coarse one. Prior N(0, prior_variance I).
class WeibullModel : public Model
{
public:
  WeibullModel(std::vector<SubjectPanel> subjects, WeibullGrid exact = {0.01, 6.0},
               WeibullGrid coarse = {0.5, 6.0}, double prior_variance = 10.0);

  std::string name() const override { return "weibull"; }
  std::size_t size() const override { return subjects_.size(); }
  std::size_t dim() const override { return 2 * covariates_ + 1; }

  double contribution(const Vector& theta, std::size_t k) const override;
  double log_prior(const Vector& theta) const override;

  bool has_approximation() const override { return true; }
  double approximate_contribution(const Vector& theta, std::size_t k) const override;

  CostModel cost_model() const override { return CostModel::wall_time; }

  std::size_t covariates() const { return covariates_; }
  const std::vector<SubjectPanel>& subjects() const { return subjects_; }
  const WeibullGrid& exact_grid() const { return exact_; }
  const WeibullGrid& coarse_grid() const { return coarse_; }

private:
  std::vector<SubjectPanel> subjects_;
  WeibullGrid exact_;
  WeibullGrid coarse_;
  double prior_variance_;
  std::size_t covariates_ = 0;
};

} // namespace submc

#endif
