#ifndef SUBMC_SAMPLING_HPP
#define SUBMC_SAMPLING_HPP

#include "submc/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace submc
{

enum class SubsampleKind
{
  with_replacement,
  indicators,
};

/// The auxiliary variable u.
///
/// With-replacement subsamples hold m population positions and the draw
/// probability of each. Indicator subsamples hold one inclusion bit per
/// population element.
struct Subsample
{
  SubsampleKind kind = SubsampleKind::with_replacement;
  std::vector<std::size_t> indices;
  std::vector<double> probabilities;
  std::vector<std::uint8_t> indicators;
  std::size_t expected_size = 0;

  std::size_t size() const;
  bool operator==(const Subsample&) const = default;
};

Subsample draw_srs(std::size_t n, std::size_t m, Rng& rng);

/// Appends `extra` SRS draws; used when the adaptive rule grows a subsample.
void extend_srs(Subsample& u, std::size_t n, std::size_t extra, Rng& rng);

/// Cumulative table for probability-proportional-to-size draws.
///
/// Built in O(n) from the weights and drawn from by binary search.
class PpsTable
{
public:
  explicit PpsTable(std::span<const double> weights);

  std::size_t size() const { return cumulative_.size(); }
  double probability(std::size_t k) const { return probabilities_[k]; }
  std::span<const double> probabilities() const { return probabilities_; }

  std::size_t draw_one(Rng& rng) const;
  Subsample draw(std::size_t m, Rng& rng) const;
  void extend(Subsample& u, std::size_t extra, Rng& rng) const;

private:
  std::vector<double> cumulative_;
  std::vector<double> probabilities_;
};

Subsample draw_pps(std::span<const double> weights, std::size_t m, Rng& rng);

/// With probability omega returns fresh_draw() and true, otherwise the
/// current subsample and false.
std::pair<Subsample, bool> propose_infrequent(const Subsample& current, double omega,
                                              const std::function<Subsample()>& fresh_draw,
                                              Rng& rng);

/// Phi_2(a, a | rho) for standard bivariate normals with correlation rho >= 0.
double bivariate_normal_cdf_equal(double a, double rho);

/// kappa = Phi_2(z, z | phi) / fraction with z = Phi^{-1}(fraction).
double kappa_from_phi(double phi, double fraction);

/// Stay-included probability kappa of the indicator chain and its stationary
/// inclusion fraction m*/n.
struct CorrelationParams
{
  double kappa = 0.0;
  double fraction = 0.0;
  double phi = 0.0;

  static CorrelationParams from_kappa(double kappa, double fraction);
  static CorrelationParams from_phi(double phi, double fraction);

  /// Pr(u_p = 0 | u_c = 0).
  double stay_excluded() const;
  void validate() const;
};

/// Independent Bernoulli(fraction) inclusion bits, the stationary law.
Subsample draw_indicators(std::size_t n, double fraction, Rng& rng);

/// One transition of every indicator through the two-state chain.
Subsample propose_correlated_indicators(const Subsample& current, const CorrelationParams& params,
                                        Rng& rng);

/// Views an indicator subsample as an SRS draw of the selected elements
/// with p_k = 1/n.
Subsample indicators_as_srs(const Subsample& indicators);

} // namespace submc

#endif
