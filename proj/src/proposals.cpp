#include "submc/proposals.hpp"

#include <cmath>
#include <numbers>

namespace submc
{

Matrix cholesky_factor(const Matrix& sigma)
{
  if(sigma.rows() != sigma.cols() || sigma.rows() == 0)
    throw Error(ErrorCode::factorization, "proposal covariance must be square and non-empty");
  Eigen::LLT<Matrix> llt(sigma);
  if(llt.info() != Eigen::Success || !llt.matrixL().toDenseMatrix().allFinite())
    throw Error(ErrorCode::factorization, "proposal covariance is not positive definite");
  return llt.matrixL();
}

Vector rwm_propose(const Vector& theta_c, double scale, const Matrix& factor, Rng& rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(theta_c.size());
  for(Eigen::Index i = 0; i < z.size(); ++i)
    z[i] = normal(rng);
  return theta_c + scale * (factor * z);
}

ImhProposal::ImhProposal(Vector center, const Matrix& sigma, double dof)
  : center_(std::move(center)), factor_(cholesky_factor(sigma)), dof_(dof)
{
  if(!(dof_ > 0.0))
    throw Error(ErrorCode::invalid_config, "Student-t degrees of freedom must be positive");
  const double d = static_cast<double>(center_.size());
  log_norm_ = std::lgamma(0.5 * (dof_ + d)) - std::lgamma(0.5 * dof_) -
              0.5 * d * std::log(dof_ * std::numbers::pi) -
              factor_.diagonal().array().log().sum();
}

Vector ImhProposal::draw(Rng& rng) const
{
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(dof_);
  Vector z(center_.size());
  for(Eigen::Index i = 0; i < z.size(); ++i)
    z[i] = normal(rng);
  const double w = chi2(rng);
  return center_ + (factor_ * z) / std::sqrt(w / dof_);
}

double ImhProposal::log_density(const Vector& theta) const
{
  const double d = static_cast<double>(center_.size());
  const Vector r = factor_.triangularView<Eigen::Lower>().solve(theta - center_);
  return log_norm_ - 0.5 * (dof_ + d) * std::log1p(r.squaredNorm() / dof_);
}

ImhDraw imh_propose(const ImhProposal& proposal, const Vector& theta_c, Rng& rng)
{
  ImhDraw out;
  out.theta = proposal.draw(rng);
  out.log_q_proposed = proposal.log_density(out.theta);
  out.log_q_current = proposal.log_density(theta_c);
  return out;
}

} // namespace submc
