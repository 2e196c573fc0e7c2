#ifndef SUBMC_TYPES_HPP
#define SUBMC_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace submc
{

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
// Observations are stored one per row.
using DataMatrix = RowMatrixX<double>;

using Rng = std::mt19937_64;

enum class ErrorCode
{
  invalid_design,
  insufficient_sample,
  invalid_tolerance,
  unsupported_operation,
  empty_population,
  invalid_config,
  invalid_params,
  numeric_domain,
  invalid_panel,
  degenerate_chain,
  invalid_cost,
  insufficient_replication,
  nonconvergence,
  factorization,
  io,
  validation,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what), code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

// Thrown by the mode finder; carries the best iterate reached.
class NonConvergence : public Error
{
public:
  NonConvergence(const std::string& what, Vector best)
    : Error(ErrorCode::nonconvergence, what), best_(std::move(best))
  {}

  const Vector& best() const noexcept { return best_; }

private:
  Vector best_;
};

// Independent generator streams derived from one master seed.
Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_id);

} // namespace submc

#endif
