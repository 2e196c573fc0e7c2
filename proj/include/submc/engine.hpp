#ifndef SUBMC_ENGINE_HPP
#define SUBMC_ENGINE_HPP

#include "submc/estimator.hpp"
#include "submc/models.hpp"
#include "submc/proposals.hpp"
#include "submc/sampling.hpp"
#include "submc/variates.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace submc
{

enum class EstimatorKind
{
  exact,
  de_srs,
  hh_pps,
};

enum class ProposalKind
{
  rwm,
  imh,
};

std::string to_string(EstimatorKind kind);
std::string to_string(ProposalKind kind);
EstimatorKind estimator_kind_from(const std::string& text);
ProposalKind proposal_kind_from(const std::string& text);

struct EngineConfig
{
  std::size_t iterations = 10000;
  double burnin_fraction = 0.1;
  ProposalKind proposal = ProposalKind::rwm;
  EstimatorKind estimator = EstimatorKind::exact;
  // Subsample size for with-replacement designs and m* for indicators.
  std::size_t subsample_size = 100;
  double omega = 1.0;
  std::optional<CorrelationParams> correlation;
  // Adaptive subsample size: grow the proposed subsample while the
  // variance exceeds v_max, at most max_adapt_rounds times.
  std::optional<double> v_max;
  std::size_t max_adapt_rounds = 10;
  // Negative means the default: 0.35 exact, 0.15 pseudo-marginal.
  double target_acceptance = -1.0;
  // Non-positive means 2.38 / sqrt(dim).
  double initial_scale = 0.0;
  std::size_t adapt_batch = 50;
  double imh_dof = 10.0;
  std::uint64_t seed = 1;

  double resolved_target_acceptance() const;
  double resolved_initial_scale(std::size_t dim) const;
  std::size_t burnin() const;
  void validate() const;
};

/// What the chain runs on. `variates` supplies q for DE-SRS and the sign
/// shift (or zero) for HH-PPS; `weight_proxy` supplies PPS size measures.
struct ChainSetup
{
  const Model* model = nullptr;
  const Population* population = nullptr;
  ControlVariates* variates = nullptr;
  ControlVariates* weight_proxy = nullptr;
  Vector theta_init;
  // RWM covariance, and the IMH centre and scale matrix.
  Matrix sigma;
  Vector mode;
};

struct ChainState
{
  Vector theta;
  Subsample subsample;
  LogLikEstimate estimate;
  double log_phat = 0.0;
  double log_prior = 0.0;
};

struct IterationRecord
{
  bool accepted = false;
  bool refreshed = false;
  double accept_probability = 0.0;
  // Proposed-side subsample size and variance, after adaptation.
  std::size_t m = 0;
  double sigma2 = 0.0;
  double sigma2_before = 0.0;
  std::size_t adapt_rounds = 0;
  bool adapt_capped = false;
  // Cumulative contribution evaluations including this iteration.
  std::size_t cumulative_cost = 0;
  // Wall time since the chain started; reported, never written to traces.
  double elapsed_seconds = 0.0;
  double scale = 0.0;
};

struct Trace
{
  Matrix draws;
  std::vector<IterationRecord> records;
  std::size_t burnin = 0;
  double final_scale = 0.0;
  double wall_seconds = 0.0;
  // Estimator calls, and how many of them hit an unchanged (theta, u).
  std::size_t estimator_calls = 0;
  std::size_t current_recomputations = 0;
  std::optional<std::string> error;

  std::size_t completed() const { return records.size(); }
  /// Post-burn-in draws.
  Matrix kept() const;
  double acceptance_rate(bool after_burnin = true) const;
  double mean_sampling_fraction(std::size_t population, bool after_burnin = true) const;
  /// Evaluations, or seconds, spent after burn-in.
  double kept_cost() const;
  double kept_seconds() const;
};

/// Streams derived from one seed: theta proposals, subsample draws and
/// acceptance uniforms never share a generator.
struct ChainStreams
{
  Rng theta;
  Rng u;
  Rng accept;

  static ChainStreams from_seed(std::uint64_t seed);
};

/// Runs a configured chain. Errors stop the run; the completed part of the
/// trace is returned with `error` set.
class Sampler
{
public:
  Sampler(const ChainSetup& setup, const EngineConfig& config);

  const ChainState& state() const { return state_; }
  double scale() const { return scale_; }

  /// One Metropolis-Hastings step on (theta, u).
  IterationRecord step(bool in_burnin);

  std::size_t estimator_calls() const { return estimator_calls_; }
  std::size_t total_cost() const { return total_cost_; }
  void set_scale(double s) { scale_ = s; }

private:
  struct Proposed
  {
    Subsample subsample;
    LogLikEstimate estimate;
    double log_phat = 0.0;
    bool refreshed = true;
    double sigma2_before = 0.0;
    std::size_t rounds = 0;
    bool capped = false;
  };

  Proposed evaluate(const Vector& theta, const Subsample* current, bool in_burnin);
  Subsample fresh_subsample(std::size_t m, const PpsTable* table);

  ChainSetup setup_;
  EngineConfig config_;
  ChainStreams streams_;
  Matrix factor_;
  std::optional<ImhProposal> imh_;
  ChainState state_;
  double scale_ = 1.0;
  std::size_t estimator_calls_ = 0;
  std::size_t total_cost_ = 0;
};

Trace run_chain(const ChainSetup& setup, const EngineConfig& config);

/// log scale + gamma_t (observed - target), gamma_t = t^{-0.6}.
double adapt_burnin(double log_scale, double observed_acceptance, double target_acceptance,
                    std::size_t batch_index);

/// Smallest m with fractional error exp(sigma2^2 / (4 (m - 1))) - 1 about
/// `fractional_error`, capped at n.
std::size_t choose_m_for_target_error(double sigma2_target, double fractional_error,
                                      std::size_t n = std::numeric_limits<std::size_t>::max());

/// Subsample size bringing the DE-SRS estimator variance at theta to about
/// `target_sigma2`, from `pilots` pilot estimates at size `pilot_m`.
std::size_t calibrate_subsample_size(const Model& model, const Population& population,
                                     ControlVariates& variates, const Vector& theta,
                                     double target_sigma2, std::size_t pilot_m,
                                     std::size_t pilots, Rng& rng);

/// Log acceptance ratios under the mixture u-proposal
/// q(u_p | u_c) = omega p(u_p) + (1 - omega) [u_p = u_c].
struct AcceptanceInputs
{
  double log_phat_p = 0.0;
  double log_phat_c = 0.0;
  double log_prior_p = 0.0;
  double log_prior_c = 0.0;
  double log_q_theta_c_given_p = 0.0;
  double log_q_theta_p_given_c = 0.0;
  double log_pu_p = 0.0;
  double log_pu_c = 0.0;
  double omega = 1.0;
  bool same_u = false;
};

struct AcceptanceRatios
{
  double full = 0.0;
  double simplified = 0.0;
};

AcceptanceRatios acceptance_simplification_check(const AcceptanceInputs& in);

} // namespace submc

#endif
