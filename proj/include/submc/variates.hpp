#ifndef SUBMC_VARIATES_HPP
#define SUBMC_VARIATES_HPP

#include "submc/clustering.hpp"
#include "submc/estimator.hpp"
#include "submc/models.hpp"
#include "submc/sampling.hpp"
#include "submc/surface.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace submc
{

/// Splits the model's elements into the subsampled population and the
/// always-evaluated set. Subsample positions index `members`.
struct Population
{
  std::vector<std::size_t> members;
  std::vector<std::size_t> always;

  static Population of(const Model& model);
  std::size_t size() const { return members.size(); }
};

/// Control variates q for the subsampled population at one theta.
///
/// `set_theta` does the per-iteration work; `total` and `cost` then describe
/// q = sum_k q_k and the evaluations spent on it.
class ControlVariates
{
public:
  virtual ~ControlVariates() = default;

  virtual std::string name() const = 0;
  virtual void set_theta(const Vector& theta) = 0;
  virtual double total() const = 0;
  virtual std::size_t cost() const = 0;
  /// q at population position `pos`.
  virtual double variate(std::size_t pos) const = 0;

  /// Whether the variates are fit to serve as PPS size measures.
  virtual bool provides_weights() const { return false; }
};

/// q = 0: the plain Hansen-Hurwitz estimator.
class ZeroVariates : public ControlVariates
{
public:
  std::string name() const override { return "none"; }
  void set_theta(const Vector&) override {}
  double total() const override { return 0.0; }
  std::size_t cost() const override { return 0; }
  double variate(std::size_t) const override { return 0.0; }
};

/// q_k = d for every k, the shift of a sign split; the estimator then works
/// on the single-signed l*_k.
class ShiftVariates : public ControlVariates
{
public:
  ShiftVariates(const Model& model, const Population& population);

  std::string name() const override { return "sign-split"; }
  void set_theta(const Vector& theta) override;
  double total() const override { return shift_ * static_cast<double>(population_.size()); }
  std::size_t cost() const override { return 0; }
  double variate(std::size_t) const override { return shift_; }
  double shift() const { return shift_; }

private:
  const Model& model_;
  const Population& population_;
  double shift_ = 0.0;
};

struct TaylorOptions
{
  double epsilon = 0.5;
  // Evaluate each centroid Hessian once at this parameter and keep it.
  std::optional<Vector> fixed_hessian_at;
  // Binary sidecar for the clustering; empty for none.
  std::filesystem::path sidecar;
};

/// Second-order Taylor expansions about epsilon-ball cluster centroids.
class TaylorVariates : public ControlVariates
{
public:
  TaylorVariates(const Model& model, const Population& population, const TaylorOptions& options);

  std::string name() const override { return "taylor"; }
  void set_theta(const Vector& theta) override;
  double total() const override { return total_; }
  std::size_t cost() const override { return summaries_.size(); }
  double variate(std::size_t pos) const override;

  const ClusterSet& clusters() const { return clusters_; }
  const std::vector<CentroidSummary>& summaries() const { return summaries_; }
  const DataMatrix& points() const { return points_; }
  bool loaded_from_sidecar() const { return loaded_; }

private:
  const Model& model_;
  DataMatrix points_;
  ClusterSet clusters_;
  std::vector<CentroidSummary> summaries_;
  std::vector<Matrix> fixed_hessians_;
  std::vector<DataDerivatives> at_centroid_;
  double total_ = 0.0;
  bool loaded_ = false;
};

/// l_k evaluated exactly on a training set V; a fitted surface predicts the rest.
class SurfaceVariates : public ControlVariates
{
public:
  /// `mode` is the reference parameter the surface is tuned at.
  SurfaceVariates(const Model& model, const Population& population, const Vector& mode,
                  double training_fraction, const SurfaceOptions& options);

  std::string name() const override { return "surface"; }
  void set_theta(const Vector& theta) override;
  double total() const override { return total_; }
  std::size_t cost() const override { return fit_.training.size(); }
  double variate(std::size_t pos) const override { return values_[pos]; }
  bool provides_weights() const override { return true; }

  const SurfaceFit& fit() const { return fit_; }

private:
  const Model& model_;
  const Population& population_;
  SurfaceFit fit_;
  std::vector<double> values_;
  double total_ = 0.0;
};

/// The model's cheap approximation (e.g. a coarse integration grid) for
/// every element.
class NumericalVariates : public ControlVariates
{
public:
  NumericalVariates(const Model& model, const Population& population);

  std::string name() const override { return "numerical"; }
  void set_theta(const Vector& theta) override;
  double total() const override { return total_; }
  std::size_t cost() const override { return 0; }
  double variate(std::size_t pos) const override { return values_[pos]; }
  bool provides_weights() const override { return true; }

private:
  const Model& model_;
  const Population& population_;
  std::vector<double> values_;
  double total_ = 0.0;
};

/// PPS size measures from a proxy: |q_k|, or |q_k - d| when the model has a
/// sign split with shift d. Weights are floored at 1e-12 of the largest.
std::vector<double> pps_weights(const Model& model, const Population& population,
                                const Vector& theta, const ControlVariates& proxy);

/// Difference estimator at theta over a with-replacement or indicator
/// subsample of the population, with the always-evaluated elements added
/// exactly. `variates` must already be set to theta.
LogLikEstimate estimate_loglik(const Model& model, const Vector& theta,
                               const Population& population, const Subsample& subsample,
                               const ControlVariates& variates);

/// Sum over `always` of l_k(theta).
double always_total(const Model& model, const Population& population, const Vector& theta);

} // namespace submc

#endif
