#ifndef SUBMC_PROPOSALS_HPP
#define SUBMC_PROPOSALS_HPP

#include "submc/types.hpp"

namespace submc
{

/// Lower Cholesky factor of a covariance; factorization error when it is not
/// positive definite.
Matrix cholesky_factor(const Matrix& sigma);

/// theta_c + scale * L z with z standard normal.
Vector rwm_propose(const Vector& theta_c, double scale, const Matrix& factor, Rng& rng);

/// Multivariate Student-t independence proposal t_dof(center, Sigma).
class ImhProposal
{
public:
  ImhProposal(Vector center, const Matrix& sigma, double dof = 10.0);

  Vector draw(Rng& rng) const;
  double log_density(const Vector& theta) const;

  const Vector& center() const { return center_; }
  double dof() const { return dof_; }

private:
  Vector center_;
  Matrix factor_;
  double dof_;
  double log_norm_;
};

struct ImhDraw
{
  Vector theta;
  double log_q_proposed = 0.0;
  double log_q_current = 0.0;
};

ImhDraw imh_propose(const ImhProposal& proposal, const Vector& theta_c, Rng& rng);

} // namespace submc

#endif
