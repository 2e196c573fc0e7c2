#ifndef SUBMC_ESTIMATOR_HPP
#define SUBMC_ESTIMATOR_HPP

#include "submc/types.hpp"

#include <cstddef>
#include <limits>
#include <span>

namespace submc
{

/// Subsample estimate of a log-likelihood total.
///
/// `value` already includes the control-variate total `known_total`.
/// `cost` counts exact contribution evaluations plus whatever the control
/// variates declared for producing `known_total`.
struct LogLikEstimate
{
  double value = 0.0;
  double variance = 0.0;
  std::size_t subsample_size = 0;
  double known_total = 0.0;
  std::size_t cost = 0;
};

/// One sampled draw: the exact contribution l_k, its control variate q_k and
/// the draw probability p_k of element k.
struct Term
{
  std::size_t index = 0;
  double contribution = 0.0;
  double variate = 0.0;
  double probability = 1.0;

  double scaled_difference() const { return (contribution - variate) / probability; }
};

/// l_k = shifted_contribution + shift, with shifted_contribution single-signed
/// across the population at a fixed parameter.
struct SignSplit
{
  double shifted_contribution = 0.0;
  double shift = 0.0;
};

/// Unbiased with-replacement variance of the mean of `terms`:
/// sum (z_i - mean)^2 / (m (m - 1)).
double estimate_variance(std::span<const double> terms);

/// Difference/Hansen-Hurwitz estimator over already evaluated draws.
///
/// value = known_total + mean((l - q) / p). The variance is centred at the
/// sample mean of the scaled differences, so it stays unbiased for any q.
/// Throws invalid_design for p <= 0 and insufficient_sample for m < 2.
LogLikEstimate estimate_from_terms(std::span<const Term> terms, double known_total,
                                   std::size_t variate_cost);

/// log of exp(value - variance / 2); everything stays on the log scale.
double bias_corrected_log_likelihood(const LogLikEstimate& est);

/// Subsample size expected to bring the variance down to v_max:
/// ceil(m * variance / v_max), capped at `population`.
std::size_t adaptive_sample_size(const LogLikEstimate& est, double v_max,
                                 std::size_t population = std::numeric_limits<std::size_t>::max());

} // namespace submc

#endif
