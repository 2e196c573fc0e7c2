#ifndef SUBMC_DATASETS_HPP
#define SUBMC_DATASETS_HPP

#include "submc/models.hpp"
#include "submc/weibull.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace submc
{

/// Intercept plus p - 1 standard-normal covariates; y ~ Bernoulli(s(x'beta)).
LogisticData generate_logistic(const Vector& beta, std::size_t n, Rng& rng);

/// Series of length n started at the stationary mean, Student-t(nu) errors.
Vector generate_ar1(const Vector& theta, ArParameterization param, std::size_t n, double nu,
                    Rng& rng);

/// Up to `periods` unit-length periods per subject, ending at the first event
/// (y = 0). Covariates are an intercept plus standard normals;
/// theta = (beta_lambda, beta_rho, log tau^2).
std::vector<SubjectPanel> generate_weibull(const Vector& theta, std::size_t subjects,
                                           std::size_t periods, Rng& rng);

Vector generate_normal(double mean, double sigma, std::size_t n, Rng& rng);

/// Shortest text that parses back to the same double.
std::string format_double(double x);

// CSV with a one-line header. Readers report the offending line on errors.
void write_logistic_csv(const std::filesystem::path& path, const LogisticData& data);
LogisticData read_logistic_csv(const std::filesystem::path& path);

void write_series_csv(const std::filesystem::path& path, const Vector& series);
Vector read_series_csv(const std::filesystem::path& path);

/// Long format: subject, period, t_start, t_end, y, x0, x1, ...
void write_panels_csv(const std::filesystem::path& path, const std::vector<SubjectPanel>& panels);
std::vector<SubjectPanel> read_panels_csv(const std::filesystem::path& path);

} // namespace submc

#endif
