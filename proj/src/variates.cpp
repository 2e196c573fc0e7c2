#include "submc/variates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace submc
{

Population Population::of(const Model& model)
{
  Population p;
  p.always = model.always_evaluate();
  std::sort(p.always.begin(), p.always.end());
  std::vector<char> fixed(model.size(), 0);
  for(auto k : p.always)
  {
    if(k >= model.size())
      throw Error(ErrorCode::invalid_params, "always-evaluated index out of range");
    fixed[k] = 1;
  }
  for(std::size_t k = 0; k < model.size(); ++k)
    if(!fixed[k])
      p.members.push_back(k);
  if(p.members.empty())
    throw Error(ErrorCode::empty_population, "no elements left to subsample");
  return p;
}

ShiftVariates::ShiftVariates(const Model& model, const Population& population)
  : model_(model), population_(population)
{
  if(!model.has_sign_split())
    throw Error(ErrorCode::unsupported_operation, model.name() + " declares no sign split");
}

void ShiftVariates::set_theta(const Vector& theta)
{
  shift_ = model_.sign_split(theta, population_.members.front()).shift;
}

namespace
{

DataMatrix population_points(const Model& model, const Population& population)
{
  if(!model.has_data_derivatives())
    throw Error(ErrorCode::unsupported_operation, model.name() + " has no data-space representation");
  DataMatrix points(static_cast<Eigen::Index>(population.size()),
                    static_cast<Eigen::Index>(model.data_dim()));
  for(std::size_t i = 0; i < population.size(); ++i)
    points.row(static_cast<Eigen::Index>(i)) = model.data_point(population.members[i]).transpose();
  return points;
}

} // namespace

TaylorVariates::TaylorVariates(const Model& model, const Population& population,
                               const TaylorOptions& options)
  : model_(model), points_(population_points(model, population))
{
  const std::uint64_t key = clustering_key(points_, options.epsilon);
  if(!options.sidecar.empty())
  {
    if(auto stored = load_clustering(options.sidecar, key))
    {
      clusters_ = std::move(stored->first);
      summaries_ = std::move(stored->second);
      loaded_ = true;
    }
  }
  if(!loaded_)
  {
    const Standardizer standardizer = Standardizer::fit(points_);
    clusters_ = cluster_epsilon_ball(standardizer.apply(points_), options.epsilon);
    summaries_ = precompute_centroid_statistics(points_, clusters_);
    if(!options.sidecar.empty())
      save_clustering(options.sidecar, key, clusters_, summaries_);
  }
  if(options.fixed_hessian_at)
  {
    fixed_hessians_.reserve(summaries_.size());
    for(const auto& s : summaries_)
      fixed_hessians_.push_back(model.data_derivatives(*options.fixed_hessian_at, s.centroid).hessian);
  }
}

void TaylorVariates::set_theta(const Vector& theta)
{
  total_ = proxy_total(theta, model_, summaries_, fixed_hessians_.empty() ? nullptr : &fixed_hessians_,
                       &at_centroid_)
             .first;
}

double TaylorVariates::variate(std::size_t pos) const
{
  const std::size_t j = clusters_.assignments[pos];
  return taylor_proxy(points_.row(static_cast<Eigen::Index>(pos)).transpose(), summaries_[j],
                      at_centroid_[j]);
}

SurfaceVariates::SurfaceVariates(const Model& model, const Population& population,
                                 const Vector& mode, double training_fraction,
                                 const SurfaceOptions& options)
  : model_(model), population_(population)
{
  if(!(training_fraction > 0.0 && training_fraction <= 1.0))
    throw Error(ErrorCode::invalid_config, "surface training fraction must lie in (0, 1]");
  const DataMatrix raw = population_points(model, population);
  const DataMatrix points = Standardizer::fit(raw).apply(raw);

  const std::size_t n = population.size();
  const auto size = std::clamp<std::size_t>(
    static_cast<std::size_t>(std::llround(training_fraction * static_cast<double>(n))), 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_stream(options.seed, 0x7375);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(size);

  Vector at_mode(static_cast<Eigen::Index>(n));
  for(std::size_t i = 0; i < n; ++i)
    at_mode[static_cast<Eigen::Index>(i)] = model.contribution(mode, population.members[i]);
  fit_ = fit_surface(points, order, at_mode, options);
  values_.assign(n, 0.0);
}

void SurfaceVariates::set_theta(const Vector& theta)
{
  Vector train(static_cast<Eigen::Index>(fit_.training.size()));
  for(std::size_t i = 0; i < fit_.training.size(); ++i)
  {
    const double l = model_.contribution(theta, population_.members[fit_.training[i]]);
    train[static_cast<Eigen::Index>(i)] = l;
    values_[fit_.training[i]] = l;
  }
  const Vector pred = predict_surface(fit_, train);
  for(std::size_t i = 0; i < fit_.holdout.size(); ++i)
    values_[fit_.holdout[i]] = pred[static_cast<Eigen::Index>(i)];
  total_ = 0.0;
  for(double v : values_)
    total_ += v;
}

NumericalVariates::NumericalVariates(const Model& model, const Population& population)
  : model_(model), population_(population), values_(population.size(), 0.0)
{
  if(!model.has_approximation())
    throw Error(ErrorCode::unsupported_operation, model.name() + " has no cheap approximation");
}

void NumericalVariates::set_theta(const Vector& theta)
{
  total_ = 0.0;
  for(std::size_t i = 0; i < values_.size(); ++i)
  {
    values_[i] = model_.approximate_contribution(theta, population_.members[i]);
    total_ += values_[i];
  }
}

std::vector<double> pps_weights(const Model& model, const Population& population,
                                const Vector& theta, const ControlVariates& proxy)
{
  if(!proxy.provides_weights())
    throw Error(ErrorCode::invalid_config, proxy.name() + " variates cannot serve as PPS weights");
  const double shift =
    model.has_sign_split() ? model.sign_split(theta, population.members.front()).shift : 0.0;
  std::vector<double> w(population.size());
  double largest = 0.0;
  for(std::size_t i = 0; i < w.size(); ++i)
  {
    w[i] = std::abs(proxy.variate(i) - shift);
    largest = std::max(largest, w[i]);
  }
  if(!(largest > 0.0) || !std::isfinite(largest))
    throw Error(ErrorCode::invalid_design, "proxy weights are all zero or not finite");
  const double floor = 1e-12 * largest;
  for(double& x : w)
    x = std::max(x, floor);
  return w;
}

double always_total(const Model& model, const Population& population, const Vector& theta)
{
  double total = 0.0;
  for(auto k : population.always)
    total += model.contribution(theta, k);
  return total;
}

LogLikEstimate estimate_loglik(const Model& model, const Vector& theta,
                               const Population& population, const Subsample& subsample,
                               const ControlVariates& variates)
{
  const Subsample& draws =
    subsample.kind == SubsampleKind::indicators ? indicators_as_srs(subsample) : subsample;
  if(subsample.kind == SubsampleKind::indicators && subsample.indicators.size() != population.size())
    throw Error(ErrorCode::invalid_params, "indicator vector does not match the population");

  std::vector<Term> terms;
  terms.reserve(draws.indices.size());
  for(std::size_t i = 0; i < draws.indices.size(); ++i)
  {
    const std::size_t pos = draws.indices[i];
    if(pos >= population.size())
      throw Error(ErrorCode::invalid_params, "subsample index out of range");
    terms.push_back({pos, model.contribution(theta, population.members[pos]), variates.variate(pos),
                     draws.probabilities[i]});
  }
  const double fixed = always_total(model, population, theta);
  LogLikEstimate est =
    estimate_from_terms(terms, variates.total() + fixed, variates.cost() + population.always.size());
  return est;
}

} // namespace submc
