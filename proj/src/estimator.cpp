#include "submc/estimator.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace submc
{

double estimate_variance(std::span<const double> terms)
{
  const std::size_t m = terms.size();
  if(m < 2)
    throw Error(ErrorCode::insufficient_sample,
                "variance estimate needs at least 2 draws, got " + std::to_string(m));

  double mean = 0.0;
  for(double z : terms)
    mean += z;
  mean /= static_cast<double>(m);

  double ss = 0.0;
  for(double z : terms)
  {
    const double d = z - mean;
    ss += d * d;
  }
  const double md = static_cast<double>(m);
  return ss / (md * (md - 1.0));
}

LogLikEstimate estimate_from_terms(std::span<const Term> terms, double known_total,
                                   std::size_t variate_cost)
{
  const std::size_t m = terms.size();
  if(m < 2)
    throw Error(ErrorCode::insufficient_sample,
                "estimator needs at least 2 draws, got " + std::to_string(m));

  std::vector<double> zeta;
  zeta.reserve(m);
  for(const Term& t : terms)
  {
    if(!(t.probability > 0.0) || t.probability > 1.0)
      throw Error(ErrorCode::invalid_design,
                  "draw probability must lie in (0, 1], got " + std::to_string(t.probability) +
                    " for element " + std::to_string(t.index));
    zeta.push_back(t.scaled_difference());
  }

  double sum = 0.0;
  for(double z : zeta)
    sum += z;

  LogLikEstimate est;
  est.value = known_total + sum / static_cast<double>(m);
  est.variance = estimate_variance(zeta);
  est.subsample_size = m;
  est.known_total = known_total;
  est.cost = m + variate_cost;
  return est;
}

double bias_corrected_log_likelihood(const LogLikEstimate& est)
{
  return est.value - 0.5 * est.variance;
}

std::size_t adaptive_sample_size(const LogLikEstimate& est, double v_max, std::size_t population)
{
  if(!(v_max > 0.0))
    throw Error(ErrorCode::invalid_tolerance, "v_max must be positive");
  if(est.subsample_size < 2)
    throw Error(ErrorCode::insufficient_sample, "adaptive size needs a variance from m >= 2");

  // Shave a relative ulp-scale amount so exact ratios do not round up.
  const double ratio = static_cast<double>(est.subsample_size) * est.variance / v_max;
  const double target = std::ceil(ratio * (1.0 - 1e-12));
  if(!(target < static_cast<double>(population)))
    return population;
  return std::max<std::size_t>(2, static_cast<std::size_t>(target));
}

} // namespace submc
