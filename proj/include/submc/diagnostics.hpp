#ifndef SUBMC_DIAGNOSTICS_HPP
#define SUBMC_DIAGNOSTICS_HPP

#include "submc/models.hpp"
#include "submc/variates.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace submc
{

/// 1 + 2 sum of lag autocorrelations, truncated by Geyer's initial positive
/// sequence rule and floored at 1.
double inefficiency_factor(std::span<const double> column);

struct EfficiencyReport
{
  std::size_t draws = 0;
  std::vector<double> inefficiency;
  std::vector<double> effective_sample_size;
  double cost = 0.0;
  std::vector<double> effective_draws;
  // Present when a baseline was supplied.
  std::vector<double> relative_effective_draws;
  std::vector<double> relative_inefficiency;
  double mean_sampling_fraction = 0.0;
};

/// `draws` holds post-burn-in draws, one row per iteration.
EfficiencyReport efficiency_report(const Matrix& draws, double cost, double mean_sampling_fraction,
                                   const EfficiencyReport* baseline = nullptr);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::span<const double> a, std::span<const double> b);

struct ParameterComparison
{
  // (mean_a - mean_b) / sd_b.
  double mean_difference = 0.0;
  // sd_a / sd_b.
  double sd_ratio = 1.0;
  double ks = 0.0;
};

struct DensityTable
{
  // One row per bin: parameter, centre, density of a, density of b.
  std::vector<std::size_t> parameter;
  std::vector<double> centre;
  std::vector<double> density_a;
  std::vector<double> density_b;
};

struct PosteriorComparison
{
  std::vector<ParameterComparison> parameters;
  DensityTable density;
};

/// Compares candidate draws `a` with baseline draws `b`, column by column.
PosteriorComparison compare_posteriors(const Matrix& a, const Matrix& b, std::size_t bins = 100);

struct ScalingOptions
{
  std::vector<Vector> thetas;
  std::vector<std::size_t> m_grid;
  std::size_t replications = 10000;
  std::uint64_t seed = 1;
};

struct ScalingRow
{
  std::size_t theta_index = 0;
  std::size_t m = 0;
  // |E exp(log p_hat - l) - 1|, with the exactly mean-zero simulation
  // controls D and (D^2 - sigma_hat^2) / 2, where D = l_hat - l.
  double fractional_error = 0.0;
  // The same quantity without simulation controls.
  double raw_error = 0.0;
  double median_abs_error = 0.0;
  double mean_sigma2 = 0.0;
};

struct ScalingTable
{
  std::vector<ScalingRow> rows;
  // Least-squares slope of log error against log m over all rows with a
  // positive error.
  double slope = 0.0;
  // Share of adjacent m-grid pairs (within each theta) whose error does
  // not increase.
  double monotone_share = 0.0;
};

/// Fractional error of the bias-corrected likelihood estimator with DE-SRS
/// at each (theta, m), from independent subsamples.
ScalingTable error_scaling_study(const Model& model, const Population& population,
                                 ControlVariates& variates, const ScalingOptions& options);

/// Ordinary least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

} // namespace submc

#endif
