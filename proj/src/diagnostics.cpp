#include "submc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace submc
{

double inefficiency_factor(std::span<const double> x)
{
  const std::size_t n = x.size();
  if(n < 100)
    throw Error(ErrorCode::insufficient_sample,
                "inefficiency factor needs at least 100 draws, got " + std::to_string(n));
  double mean = 0.0;
  for(double v : x)
    mean += v;
  mean /= static_cast<double>(n);

  auto autocov = [&](std::size_t lag)
  {
    double s = 0.0;
    for(std::size_t t = 0; t + lag < n; ++t)
      s += (x[t] - mean) * (x[t + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  if(!(gamma0 > 0.0))
    throw Error(ErrorCode::degenerate_chain, "chain column is constant");

  // Geyer: sum Gamma_k = rho_{2k} + rho_{2k+1} while positive.
  double sum = 0.0;
  for(std::size_t k = 0; 2 * k + 1 < n; ++k)
  {
    const double pair = (k == 0 ? 1.0 : autocov(2 * k) / gamma0) + autocov(2 * k + 1) / gamma0;
    if(!(pair > 0.0))
      break;
    sum += pair;
  }
  return std::max(1.0, 2.0 * sum - 1.0);
}

EfficiencyReport efficiency_report(const Matrix& draws, double cost, double mean_sampling_fraction,
                                   const EfficiencyReport* baseline)
{
  if(!(cost > 0.0) || !std::isfinite(cost))
    throw Error(ErrorCode::invalid_cost, "cost must be positive and finite");
  EfficiencyReport r;
  r.draws = static_cast<std::size_t>(draws.rows());
  r.cost = cost;
  r.mean_sampling_fraction = mean_sampling_fraction;
  for(Eigen::Index j = 0; j < draws.cols(); ++j)
  {
    const Vector col = draws.col(j);
    const double f = inefficiency_factor(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    r.inefficiency.push_back(f);
    r.effective_sample_size.push_back(static_cast<double>(r.draws) / f);
    r.effective_draws.push_back(r.effective_sample_size.back() / cost);
  }
  if(baseline)
  {
    if(baseline->inefficiency.size() != r.inefficiency.size())
      throw Error(ErrorCode::invalid_params, "baseline report has a different dimension");
    for(std::size_t j = 0; j < r.inefficiency.size(); ++j)
    {
      r.relative_effective_draws.push_back(r.effective_draws[j] / baseline->effective_draws[j]);
      r.relative_inefficiency.push_back(r.inefficiency[j] / baseline->inefficiency[j]);
    }
  }
  return r;
}

double ks_statistic(std::span<const double> a, std::span<const double> b)
{
  if(a.empty() || b.empty())
    throw Error(ErrorCode::insufficient_sample, "KS statistic needs two non-empty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while(i < sa.size() && j < sb.size())
  {
    const double v = std::min(sa[i], sb[j]);
    while(i < sa.size() && sa[i] == v)
      ++i;
    while(j < sb.size() && sb[j] == v)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

namespace
{

std::pair<double, double> mean_sd(const Vector& v)
{
  const double mean = v.mean();
  const double var = v.size() > 1 ? (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1) : 0.0;
  return {mean, std::sqrt(var)};
}

double kde(const Vector& v, double bandwidth, double at)
{
  double s = 0.0;
  for(Eigen::Index i = 0; i < v.size(); ++i)
  {
    const double z = (at - v[i]) / bandwidth;
    s += std::exp(-0.5 * z * z);
  }
  return s / (static_cast<double>(v.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
}

double silverman(const Vector& v)
{
  const double sd = mean_sd(v).second;
  const double bw = 1.06 * sd * std::pow(static_cast<double>(v.size()), -0.2);
  return bw > 0.0 ? bw : 1e-12;
}

} // namespace

PosteriorComparison compare_posteriors(const Matrix& a, const Matrix& b, std::size_t bins)
{
  if(a.cols() != b.cols())
    throw Error(ErrorCode::invalid_params, "traces have different dimensions");
  if(a.rows() < 2 || b.rows() < 2)
    throw Error(ErrorCode::insufficient_sample, "traces need at least two draws");
  PosteriorComparison out;
  for(Eigen::Index j = 0; j < a.cols(); ++j)
  {
    const Vector ca = a.col(j);
    const Vector cb = b.col(j);
    const auto [ma, sa] = mean_sd(ca);
    const auto [mb, sb] = mean_sd(cb);
    ParameterComparison pc;
    pc.mean_difference = sb > 0.0 ? (ma - mb) / sb : (ma == mb ? 0.0 : std::numeric_limits<double>::infinity());
    pc.sd_ratio = sb > 0.0 ? sa / sb : (sa == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    pc.ks = ks_statistic(std::span<const double>(ca.data(), static_cast<std::size_t>(ca.size())),
                         std::span<const double>(cb.data(), static_cast<std::size_t>(cb.size())));
    out.parameters.push_back(pc);

    const double bwa = silverman(ca);
    const double bwb = silverman(cb);
    const double lo = std::min(ca.minCoeff(), cb.minCoeff()) - 3.0 * std::max(bwa, bwb);
    const double hi = std::max(ca.maxCoeff(), cb.maxCoeff()) + 3.0 * std::max(bwa, bwb);
    const double width = (hi - lo) / static_cast<double>(bins);
    for(std::size_t k = 0; k < bins; ++k)
    {
      const double centre = lo + (static_cast<double>(k) + 0.5) * width;
      out.density.parameter.push_back(static_cast<std::size_t>(j));
      out.density.centre.push_back(centre);
      out.density.density_a.push_back(kde(ca, bwa, centre));
      out.density.density_b.push_back(kde(cb, bwb, centre));
    }
  }
  return out;
}

double ols_slope(std::span<const double> x, std::span<const double> y)
{
  if(x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::insufficient_sample, "slope needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for(std::size_t i = 0; i < x.size(); ++i)
  {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if(!(sxx > 0.0))
    throw Error(ErrorCode::insufficient_sample, "slope needs distinct x values");
  return sxy / sxx;
}

ScalingTable error_scaling_study(const Model& model, const Population& population,
                                 ControlVariates& variates, const ScalingOptions& options)
{
  if(options.replications < 100)
    throw Error(ErrorCode::insufficient_replication,
                "scaling study needs at least 100 replications, got " +
                  std::to_string(options.replications));
  if(options.m_grid.empty() || options.thetas.empty())
    throw Error(ErrorCode::invalid_config, "scaling study needs thetas and an m grid");
  for(auto m : options.m_grid)
    if(m < 2)
      throw Error(ErrorCode::invalid_config, "scaling study subsample sizes must be at least 2");

  const std::size_t n = population.size();
  const double p = 1.0 / static_cast<double>(n);
  ScalingTable table;
  std::vector<double> log_m, log_err;
  std::size_t pairs = 0, monotone = 0;

  for(std::size_t ti = 0; ti < options.thetas.size(); ++ti)
  {
    const Vector& theta = options.thetas[ti];
    variates.set_theta(theta);
    // With theta fixed, every element's l_k and q_k is evaluated once.
    std::vector<double> l(n), q(n);
    for(std::size_t i = 0; i < n; ++i)
    {
      l[i] = model.contribution(theta, population.members[i]);
      q[i] = variates.variate(i);
    }
    const double known = variates.total() + always_total(model, population, theta);
    const double exact = model.full_loglik(theta);

    double previous = std::numeric_limits<double>::quiet_NaN();
    for(std::size_t mi = 0; mi < options.m_grid.size(); ++mi)
    {
      const std::size_t m = options.m_grid[mi];
      Rng rng = make_stream(options.seed, (static_cast<std::uint64_t>(ti) << 32) | mi);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      std::vector<double> x(options.replications), d(options.replications),
        s2(options.replications);
      std::vector<Term> terms(m);
      for(std::size_t r = 0; r < options.replications; ++r)
      {
        for(std::size_t i = 0; i < m; ++i)
        {
          const std::size_t k = pick(rng);
          terms[i] = {k, l[k], q[k], p};
        }
        const LogLikEstimate est = estimate_from_terms(terms, known, 0);
        d[r] = est.value - exact;
        s2[r] = est.variance;
        x[r] = d[r] - 0.5 * est.variance;
      }

      const double reps = static_cast<double>(options.replications);
      const double x_max = *std::max_element(x.begin(), x.end());
      double shifted = 0.0, controls = 0.0, residual = 0.0;
      std::vector<double> abs_err(options.replications);
      for(std::size_t r = 0; r < options.replications; ++r)
      {
        shifted += std::exp(x[r] - x_max);
        const double control = d[r] + 0.5 * (d[r] * d[r] - s2[r]);
        controls += control;
        residual += std::expm1(x[r]) - control;
        abs_err[r] = std::abs(std::expm1(x[r]));
      }
      const double mean_exp = std::exp(x_max + std::log(shifted / reps));
      ScalingRow row;
      row.theta_index = ti;
      row.m = m;
      row.raw_error = std::abs(mean_exp - 1.0);
      row.fractional_error = x_max < 700.0 ? std::abs(residual / reps)
                                           : std::abs(mean_exp - 1.0 - controls / reps);
      std::nth_element(abs_err.begin(), abs_err.begin() + static_cast<std::ptrdiff_t>(abs_err.size() / 2),
                       abs_err.end());
      row.median_abs_error = abs_err[abs_err.size() / 2];
      row.mean_sigma2 = std::accumulate(s2.begin(), s2.end(), 0.0) / reps;
      table.rows.push_back(row);

      if(row.fractional_error > 0.0 && std::isfinite(row.fractional_error))
      {
        log_m.push_back(std::log(static_cast<double>(m)));
        log_err.push_back(std::log(row.fractional_error));
      }
      if(mi > 0)
      {
        ++pairs;
        if(row.fractional_error <= previous)
          ++monotone;
      }
      previous = row.fractional_error;
    }
  }
  table.monotone_share = pairs > 0 ? static_cast<double>(monotone) / static_cast<double>(pairs) : 1.0;
  table.slope = log_m.size() >= 2 ? ols_slope(log_m, log_err) : 0.0;
  return table;
}

} // namespace submc
