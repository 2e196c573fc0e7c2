#include "submc/sampling.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace submc
{

std::size_t Subsample::size() const
{
  if(kind == SubsampleKind::with_replacement)
    return indices.size();
  return static_cast<std::size_t>(std::count(indicators.begin(), indicators.end(), 1));
}

Subsample draw_srs(std::size_t n, std::size_t m, Rng& rng)
{
  if(n == 0)
    throw Error(ErrorCode::empty_population, "cannot draw from an empty population");
  Subsample u;
  u.kind = SubsampleKind::with_replacement;
  u.expected_size = m;
  extend_srs(u, n, m, rng);
  return u;
}

void extend_srs(Subsample& u, std::size_t n, std::size_t extra, Rng& rng)
{
  if(n == 0)
    throw Error(ErrorCode::empty_population, "cannot draw from an empty population");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double p = 1.0 / static_cast<double>(n);
  u.indices.reserve(u.indices.size() + extra);
  u.probabilities.reserve(u.probabilities.size() + extra);
  for(std::size_t i = 0; i < extra; ++i)
  {
    u.indices.push_back(pick(rng));
    u.probabilities.push_back(p);
  }
  u.expected_size = u.indices.size();
}

PpsTable::PpsTable(std::span<const double> weights)
{
  if(weights.empty())
    throw Error(ErrorCode::empty_population, "PPS design needs at least one weight");
  cumulative_.reserve(weights.size());
  double total = 0.0;
  for(std::size_t k = 0; k < weights.size(); ++k)
  {
    const double w = weights[k];
    if(!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::invalid_design,
                  "PPS weight " + std::to_string(k) + " is negative or not finite");
    total += w;
    cumulative_.push_back(total);
  }
  if(!(total > 0.0))
    throw Error(ErrorCode::invalid_design, "PPS weights are all zero");

  probabilities_.resize(weights.size());
  for(std::size_t k = 0; k < weights.size(); ++k)
    probabilities_[k] = weights[k] / total;
}

std::size_t PpsTable::draw_one(Rng& rng) const
{
  std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
  for(;;)
  {
    const double r = unif(rng);
    // First k with cumulative_[k] > r; zero-weight elements are skipped.
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    if(it != cumulative_.end())
      return static_cast<std::size_t>(it - cumulative_.begin());
  }
}

Subsample PpsTable::draw(std::size_t m, Rng& rng) const
{
  Subsample u;
  u.kind = SubsampleKind::with_replacement;
  extend(u, m, rng);
  return u;
}

void PpsTable::extend(Subsample& u, std::size_t extra, Rng& rng) const
{
  for(std::size_t i = 0; i < extra; ++i)
  {
    const std::size_t k = draw_one(rng);
    u.indices.push_back(k);
    u.probabilities.push_back(probabilities_[k]);
  }
  u.expected_size = u.indices.size();
}

Subsample draw_pps(std::span<const double> weights, std::size_t m, Rng& rng)
{
  return PpsTable(weights).draw(m, rng);
}

std::pair<Subsample, bool> propose_infrequent(const Subsample& current, double omega,
                                              const std::function<Subsample()>& fresh_draw,
                                              Rng& rng)
{
  if(!(omega > 0.0 && omega <= 1.0))
    throw Error(ErrorCode::invalid_config, "omega must lie in (0, 1]");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // The uniform is always consumed so the stream position does not depend on omega.
  const double r = unif(rng);
  if(omega == 1.0 || r < omega)
    return {fresh_draw(), true};
  return {current, false};
}

double bivariate_normal_cdf_equal(double a, double rho)
{
  const double phi_a = 0.5 * std::erfc(-a / std::numbers::sqrt2);
  if(rho == 0.0)
    return phi_a * phi_a;
  if(rho >= 1.0)
    return phi_a;

  // d Phi_2 / d r at (a, a) is exp(-a^2 / (1 + r)) / (2 pi sqrt(1 - r^2));
  // r = sin(t) removes the endpoint singularity.
  const double a2 = a * a;
  auto integrand = [a2](double t) { return std::exp(-a2 / (1.0 + std::sin(t))); };
  const double upper = std::asin(rho);
  const double integral =
    boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, upper, 15, 1e-14);
  return phi_a * phi_a + integral / (2.0 * std::numbers::pi);
}

double kappa_from_phi(double phi, double fraction)
{
  if(!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorCode::invalid_params, "fraction must lie in (0, 1)");
  if(!(phi >= 0.0 && phi <= 1.0))
    throw Error(ErrorCode::invalid_params, "phi must lie in [0, 1]");
  if(phi == 0.0)
    return fraction;
  if(phi == 1.0)
    return 1.0;
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), fraction);
  const double kappa = bivariate_normal_cdf_equal(z, phi) / fraction;
  return std::clamp(kappa, fraction, 1.0);
}

CorrelationParams CorrelationParams::from_kappa(double kappa, double fraction)
{
  CorrelationParams p;
  p.kappa = kappa;
  p.fraction = fraction;
  p.phi = std::numeric_limits<double>::quiet_NaN();
  p.validate();
  return p;
}

CorrelationParams CorrelationParams::from_phi(double phi, double fraction)
{
  CorrelationParams p;
  p.phi = phi;
  p.fraction = fraction;
  p.kappa = kappa_from_phi(phi, fraction);
  p.validate();
  return p;
}

double CorrelationParams::stay_excluded() const
{
  return 1.0 - (1.0 - kappa) * fraction / (1.0 - fraction);
}

void CorrelationParams::validate() const
{
  if(!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorCode::invalid_params, "inclusion fraction must lie in (0, 1)");
  if(!(kappa >= 0.0 && kappa <= 1.0))
    throw Error(ErrorCode::invalid_params, "kappa must lie in [0, 1]");
  const double s0 = stay_excluded();
  if(!(s0 >= 0.0 && s0 <= 1.0))
    throw Error(ErrorCode::invalid_params,
                "stay-excluded probability " + std::to_string(s0) + " outside [0, 1]");
}

Subsample draw_indicators(std::size_t n, double fraction, Rng& rng)
{
  if(n == 0)
    throw Error(ErrorCode::empty_population, "cannot draw from an empty population");
  if(!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorCode::invalid_params, "inclusion fraction must lie in (0, 1)");
  std::bernoulli_distribution include(fraction);
  Subsample u;
  u.kind = SubsampleKind::indicators;
  u.indicators.resize(n);
  for(auto& bit : u.indicators)
    bit = include(rng) ? 1 : 0;
  u.expected_size = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return u;
}

Subsample propose_correlated_indicators(const Subsample& current, const CorrelationParams& params,
                                        Rng& rng)
{
  if(current.kind != SubsampleKind::indicators)
    throw Error(ErrorCode::invalid_params, "correlated proposal needs an indicator subsample");
  params.validate();
  const double leave = 1.0 - params.kappa;
  const double enter = 1.0 - params.stay_excluded();

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Subsample next = current;
  for(auto& bit : next.indicators)
  {
    const double r = unif(rng);
    if(bit)
      bit = r < leave ? 0 : 1;
    else
      bit = r < enter ? 1 : 0;
  }
  return next;
}

Subsample indicators_as_srs(const Subsample& u)
{
  if(u.kind != SubsampleKind::indicators)
    throw Error(ErrorCode::invalid_params, "expected an indicator subsample");
  Subsample out;
  out.kind = SubsampleKind::with_replacement;
  const double p = 1.0 / static_cast<double>(u.indicators.size());
  for(std::size_t k = 0; k < u.indicators.size(); ++k)
  {
    if(u.indicators[k])
    {
      out.indices.push_back(k);
      out.probabilities.push_back(p);
    }
  }
  out.expected_size = out.indices.size();
  return out;
}

} // namespace submc
