#include "submc/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace submc
{

std::string to_string(EstimatorKind kind)
{
  switch(kind)
  {
  case EstimatorKind::exact: return "exact";
  case EstimatorKind::de_srs: return "de-srs";
  case EstimatorKind::hh_pps: return "hh-pps";
  }
  return "exact";
}

std::string to_string(ProposalKind kind)
{
  return kind == ProposalKind::rwm ? "rwm" : "imh";
}

EstimatorKind estimator_kind_from(const std::string& text)
{
  if(text == "exact")
    return EstimatorKind::exact;
  if(text == "de-srs")
    return EstimatorKind::de_srs;
  if(text == "hh-pps")
    return EstimatorKind::hh_pps;
  throw Error(ErrorCode::invalid_config, "unknown estimator kind '" + text + "'");
}

ProposalKind proposal_kind_from(const std::string& text)
{
  if(text == "rwm")
    return ProposalKind::rwm;
  if(text == "imh")
    return ProposalKind::imh;
  throw Error(ErrorCode::invalid_config, "unknown proposal kind '" + text + "'");
}

double EngineConfig::resolved_target_acceptance() const
{
  if(target_acceptance >= 0.0)
    return target_acceptance;
  return estimator == EstimatorKind::exact ? 0.35 : 0.15;
}

double EngineConfig::resolved_initial_scale(std::size_t dim) const
{
  if(initial_scale > 0.0)
    return initial_scale;
  return 2.38 / std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1)));
}

std::size_t EngineConfig::burnin() const
{
  return static_cast<std::size_t>(std::floor(burnin_fraction * static_cast<double>(iterations)));
}

void EngineConfig::validate() const
{
  if(iterations == 0)
    throw Error(ErrorCode::invalid_config, "iterations must be positive");
  if(!(burnin_fraction >= 0.0 && burnin_fraction < 1.0))
    throw Error(ErrorCode::invalid_config, "burn-in fraction must lie in [0, 1)");
  if(!(omega > 0.0 && omega <= 1.0))
    throw Error(ErrorCode::invalid_config, "omega must lie in (0, 1]");
  if(estimator != EstimatorKind::exact && !correlation && subsample_size < 2)
    throw Error(ErrorCode::invalid_config, "subsample size must be at least 2");
  if(proposal == ProposalKind::imh && estimator == EstimatorKind::hh_pps)
    throw Error(ErrorCode::invalid_config, "IMH is only offered for DE-SRS and exact runs");
  if(correlation)
  {
    if(estimator != EstimatorKind::de_srs)
      throw Error(ErrorCode::invalid_config, "correlated subsamples require DE-SRS");
    if(v_max)
      throw Error(ErrorCode::invalid_config,
                  "correlated subsamples and adaptive subsample size cannot be combined");
    correlation->validate();
  }
  if(estimator == EstimatorKind::hh_pps && omega != 1.0)
    throw Error(ErrorCode::invalid_config, "PPS subsamples are redrawn every iteration (omega = 1)");
  if(v_max && !(*v_max > 0.0))
    throw Error(ErrorCode::invalid_tolerance, "v_max must be positive");
  if(adapt_batch == 0)
    throw Error(ErrorCode::invalid_config, "adaptation batch must be positive");
  const double target = resolved_target_acceptance();
  if(!(target > 0.0 && target < 1.0))
    throw Error(ErrorCode::invalid_config, "target acceptance must lie in (0, 1)");
}

// ---------------------------------------------------------------------------

Matrix Trace::kept() const
{
  const auto start = static_cast<Eigen::Index>(std::min(burnin, completed()));
  return draws.middleRows(start, static_cast<Eigen::Index>(completed()) - start);
}

double Trace::acceptance_rate(bool after_burnin) const
{
  const std::size_t start = after_burnin ? std::min(burnin, completed()) : 0;
  if(start >= completed())
    return 0.0;
  std::size_t acc = 0;
  for(std::size_t t = start; t < completed(); ++t)
    acc += records[t].accepted ? 1 : 0;
  return static_cast<double>(acc) / static_cast<double>(completed() - start);
}

double Trace::mean_sampling_fraction(std::size_t population, bool after_burnin) const
{
  const std::size_t start = after_burnin ? std::min(burnin, completed()) : 0;
  if(start >= completed() || population == 0)
    return 0.0;
  double sum = 0.0;
  for(std::size_t t = start; t < completed(); ++t)
    sum += static_cast<double>(records[t].m);
  return sum / static_cast<double>(completed() - start) / static_cast<double>(population);
}

double Trace::kept_cost() const
{
  if(records.empty())
    return 0.0;
  const std::size_t before =
    burnin == 0 || burnin > completed() ? 0 : records[burnin - 1].cumulative_cost;
  return static_cast<double>(records.back().cumulative_cost - before);
}

double Trace::kept_seconds() const
{
  if(records.empty())
    return 0.0;
  const double before =
    burnin == 0 || burnin > completed() ? 0.0 : records[burnin - 1].elapsed_seconds;
  return records.back().elapsed_seconds - before;
}

ChainStreams ChainStreams::from_seed(std::uint64_t seed)
{
  return {make_stream(seed, 1), make_stream(seed, 2), make_stream(seed, 3)};
}

// ---------------------------------------------------------------------------

Sampler::Sampler(const ChainSetup& setup, const EngineConfig& config)
  : setup_(setup), config_(config), streams_(ChainStreams::from_seed(config.seed))
{
  config_.validate();
  if(!setup_.model)
    throw Error(ErrorCode::invalid_config, "chain has no model");
  if(config_.estimator != EstimatorKind::exact)
  {
    if(!setup_.population || !setup_.variates)
      throw Error(ErrorCode::invalid_config, "subsampling chains need a population and variates");
    if(config_.estimator == EstimatorKind::hh_pps && !setup_.weight_proxy)
      throw Error(ErrorCode::invalid_config, "PPS chains need a weight proxy");
  }
  const auto dim = static_cast<Eigen::Index>(setup_.model->dim());
  if(setup_.theta_init.size() != dim)
    throw Error(ErrorCode::invalid_config, "initial parameter has the wrong dimension");
  if(setup_.sigma.rows() != dim)
    throw Error(ErrorCode::invalid_config, "proposal covariance has the wrong dimension");

  if(config_.proposal == ProposalKind::rwm)
    factor_ = cholesky_factor(setup_.sigma);
  else
    imh_.emplace(setup_.mode.size() == dim ? setup_.mode : setup_.theta_init, setup_.sigma,
                 config_.imh_dof);
  scale_ = config_.resolved_initial_scale(setup_.model->dim());

  state_.theta = setup_.theta_init;
  state_.log_prior = setup_.model->log_prior(state_.theta);
  if(!std::isfinite(state_.log_prior))
    throw Error(ErrorCode::invalid_params, "initial parameter lies outside the prior support");
  Proposed first = evaluate(state_.theta, nullptr, true);
  state_.subsample = std::move(first.subsample);
  state_.estimate = first.estimate;
  state_.log_phat = first.log_phat;
}

Subsample Sampler::fresh_subsample(std::size_t m, const PpsTable* table)
{
  if(table)
    return table->draw(m, streams_.u);
  return draw_srs(setup_.population->size(), m, streams_.u);
}

Sampler::Proposed Sampler::evaluate(const Vector& theta, const Subsample* current, bool in_burnin)
{
  ++estimator_calls_;
  const Model& model = *setup_.model;
  Proposed out;

  if(config_.estimator == EstimatorKind::exact)
  {
    out.estimate.value = model.full_loglik(theta);
    out.estimate.subsample_size = model.size();
    out.estimate.cost = model.size();
    out.log_phat = out.estimate.value;
    total_cost_ += out.estimate.cost;
    return out;
  }

  const Population& pop = *setup_.population;
  ControlVariates& variates = *setup_.variates;
  std::size_t extra_cost = 0;
  std::optional<PpsTable> table;
  if(config_.estimator == EstimatorKind::hh_pps)
  {
    setup_.weight_proxy->set_theta(theta);
    extra_cost = setup_.weight_proxy->cost();
    const auto weights = pps_weights(model, pop, theta, *setup_.weight_proxy);
    table.emplace(weights);
  }
  variates.set_theta(theta);

  if(config_.correlation)
  {
    out.subsample = current ? propose_correlated_indicators(*current, *config_.correlation, streams_.u)
                            : draw_indicators(pop.size(), config_.correlation->fraction, streams_.u);
    out.refreshed = true;
  }
  else if(table || !current)
  {
    out.subsample = fresh_subsample(config_.subsample_size, table ? &*table : nullptr);
  }
  else
  {
    const double omega = in_burnin ? 1.0 : config_.omega;
    auto [u, refreshed] = propose_infrequent(
      *current, omega, [&] { return fresh_subsample(config_.subsample_size, nullptr); },
      streams_.u);
    out.subsample = std::move(u);
    out.refreshed = refreshed;
  }

  // Evaluate the draws once; adaptation only adds new ones.
  std::vector<Term> terms;
  auto add_terms = [&](const Subsample& draws, std::size_t from)
  {
    for(std::size_t i = from; i < draws.indices.size(); ++i)
    {
      const std::size_t pos = draws.indices[i];
      terms.push_back({pos, model.contribution(theta, pop.members[pos]), variates.variate(pos),
                       draws.probabilities[i]});
    }
  };
  if(out.subsample.kind == SubsampleKind::indicators)
    add_terms(indicators_as_srs(out.subsample), 0);
  else
    add_terms(out.subsample, 0);

  const double fixed_total = always_total(model, pop, theta);
  auto current_estimate = [&]
  {
    if(terms.size() < 2)
      throw Error(ErrorCode::insufficient_sample,
                  "subsample has " + std::to_string(terms.size()) + " draws; at least 2 are needed");
    return estimate_from_terms(terms, variates.total() + fixed_total,
                               variates.cost() + extra_cost + pop.always.size());
  };
  out.estimate = current_estimate();
  out.sigma2_before = out.estimate.variance;

  if(config_.v_max)
  {
    while(out.estimate.variance > *config_.v_max)
    {
      if(out.rounds == config_.max_adapt_rounds)
      {
        out.capped = true;
        break;
      }
      const std::size_t target = adaptive_sample_size(out.estimate, *config_.v_max, pop.size());
      const std::size_t have = out.subsample.indices.size();
      if(target <= have)
      {
        out.capped = true;
        break;
      }
      const std::size_t extra = target - have;
      if(table)
        table->extend(out.subsample, extra, streams_.u);
      else
        extend_srs(out.subsample, pop.size(), extra, streams_.u);
      add_terms(out.subsample, have);
      out.estimate = current_estimate();
      ++out.rounds;
    }
  }

  out.log_phat = bias_corrected_log_likelihood(out.estimate);
  total_cost_ += out.estimate.cost;
  return out;
}

IterationRecord Sampler::step(bool in_burnin)
{
  const Model& model = *setup_.model;
  Vector theta_p;
  double log_q_ratio = 0.0;
  if(config_.proposal == ProposalKind::rwm)
    theta_p = rwm_propose(state_.theta, scale_, factor_, streams_.theta);
  else
  {
    ImhDraw d = imh_propose(*imh_, state_.theta, streams_.theta);
    theta_p = std::move(d.theta);
    log_q_ratio = d.log_q_current - d.log_q_proposed;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = unif(streams_.accept);

  IterationRecord rec;
  rec.scale = scale_;
  const double log_prior_p = model.log_prior(theta_p);
  if(std::isfinite(log_prior_p))
  {
    Proposed p = evaluate(theta_p, &state_.subsample, in_burnin);
    const double log_alpha =
      (p.log_phat + log_prior_p) - (state_.log_phat + state_.log_prior) + log_q_ratio;
    rec.accept_probability = std::isnan(log_alpha) ? 0.0 : std::exp(std::min(0.0, log_alpha));
    rec.accepted = r < rec.accept_probability;
    rec.refreshed = p.refreshed;
    rec.m = p.estimate.subsample_size;
    rec.sigma2 = p.estimate.variance;
    rec.sigma2_before = p.sigma2_before;
    rec.adapt_rounds = p.rounds;
    rec.adapt_capped = p.capped;
    if(rec.accepted)
    {
      state_.theta = std::move(theta_p);
      state_.log_prior = log_prior_p;
      state_.subsample = std::move(p.subsample);
      state_.estimate = p.estimate;
      state_.log_phat = p.log_phat;
    }
  }
  else
  {
    rec.m = state_.estimate.subsample_size;
    rec.sigma2 = state_.estimate.variance;
    rec.sigma2_before = state_.estimate.variance;
  }
  rec.cumulative_cost = total_cost_;
  return rec;
}

Trace run_chain(const ChainSetup& setup, const EngineConfig& config)
{
  const auto start = std::chrono::steady_clock::now();
  Sampler sampler(setup, config);
  Trace trace;
  trace.burnin = config.burnin();
  const auto dim = static_cast<Eigen::Index>(setup.model->dim());
  trace.draws.resize(static_cast<Eigen::Index>(config.iterations), dim);
  trace.records.reserve(config.iterations);

  const bool adapt = config.proposal == ProposalKind::rwm;
  const double target = config.resolved_target_acceptance();
  double batch_sum = 0.0;
  std::size_t batch_count = 0;
  std::size_t batch_index = 0;

  try
  {
    for(std::size_t t = 0; t < config.iterations; ++t)
    {
      const bool in_burnin = t < trace.burnin;
      IterationRecord rec = sampler.step(in_burnin);
      rec.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      trace.draws.row(static_cast<Eigen::Index>(t)) = sampler.state().theta.transpose();
      trace.records.push_back(rec);

      if(in_burnin && adapt)
      {
        batch_sum += rec.accept_probability;
        if(++batch_count == config.adapt_batch)
        {
          const double log_scale = adapt_burnin(std::log(sampler.scale()), batch_sum / static_cast<double>(batch_count),
                                                target, ++batch_index);
          sampler.set_scale(std::exp(log_scale));
          batch_sum = 0.0;
          batch_count = 0;
        }
      }
    }
  }
  catch(const Error& e)
  {
    trace.error = std::string(to_string(e.code())) + ": " + e.what();
    trace.draws.conservativeResize(static_cast<Eigen::Index>(trace.records.size()), dim);
  }
  trace.final_scale = sampler.scale();
  trace.estimator_calls = sampler.estimator_calls();
  trace.wall_seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

double adapt_burnin(double log_scale, double observed_acceptance, double target_acceptance,
                    std::size_t batch_index)
{
  const double gamma = std::pow(static_cast<double>(std::max<std::size_t>(batch_index, 1)), -0.6);
  return log_scale + gamma * (observed_acceptance - target_acceptance);
}

std::size_t choose_m_for_target_error(double sigma2_target, double fractional_error, std::size_t n)
{
  if(!(fractional_error > 0.0))
    throw Error(ErrorCode::invalid_tolerance, "fractional error must be positive");
  if(!(sigma2_target >= 0.0))
    throw Error(ErrorCode::invalid_params, "target variance must be non-negative");
  if(sigma2_target == 0.0)
    return std::min<std::size_t>(1, n);
  const double m = 1.0 + sigma2_target * sigma2_target / (4.0 * std::log1p(fractional_error));
  if(!(m < static_cast<double>(n)))
    return n;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(m)));
}

std::size_t calibrate_subsample_size(const Model& model, const Population& population,
                                     ControlVariates& variates, const Vector& theta,
                                     double target_sigma2, std::size_t pilot_m,
                                     std::size_t pilots, Rng& rng)
{
  if(!(target_sigma2 > 0.0))
    throw Error(ErrorCode::invalid_tolerance, "target variance must be positive");
  if(pilot_m < 2 || pilots == 0)
    throw Error(ErrorCode::insufficient_sample, "calibration needs pilots of at least 2 draws");
  variates.set_theta(theta);
  double mean_variance = 0.0;
  for(std::size_t r = 0; r < pilots; ++r)
  {
    const Subsample u = draw_srs(population.size(), pilot_m, rng);
    mean_variance += estimate_loglik(model, theta, population, u, variates).variance;
  }
  mean_variance /= static_cast<double>(pilots);
  const double m = std::ceil(static_cast<double>(pilot_m) * mean_variance / target_sigma2);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(m, 2.0)), 2, population.size());
}

AcceptanceRatios acceptance_simplification_check(const AcceptanceInputs& in)
{
  if(in.same_u && in.log_pu_p != in.log_pu_c)
    throw Error(ErrorCode::invalid_params, "identical subsamples must have equal probability");
  if(!(in.omega > 0.0 && in.omega <= 1.0))
    throw Error(ErrorCode::invalid_config, "omega must lie in (0, 1]");

  // log q(u' | u) under the mixture proposal.
  auto log_qu = [&](double log_pu_to)
  {
    const double refresh = std::log(in.omega) + log_pu_to;
    if(!in.same_u || in.omega == 1.0)
      return refresh;
    const double stay = std::log1p(-in.omega);
    const double hi = std::max(stay, refresh);
    return hi + std::log1p(std::exp(std::min(stay, refresh) - hi));
  };
  const double log_qu_p_given_c = log_qu(in.log_pu_p);
  const double log_qu_c_given_p = log_qu(in.log_pu_c);

  const double theta_part = (in.log_phat_p - in.log_phat_c) + (in.log_prior_p - in.log_prior_c) +
                            (in.log_q_theta_c_given_p - in.log_q_theta_p_given_c);
  AcceptanceRatios out;
  out.full = theta_part + (in.log_pu_p - in.log_pu_c) + (log_qu_c_given_p - log_qu_p_given_c);
  out.simplified = theta_part;
  return out;
}

} // namespace submc
