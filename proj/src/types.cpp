#include "submc/types.hpp"

namespace submc
{

std::string_view to_string(ErrorCode code)
{
  switch(code)
  {
  case ErrorCode::invalid_design: return "invalid-design";
  case ErrorCode::insufficient_sample: return "insufficient-sample";
  case ErrorCode::invalid_tolerance: return "invalid-tolerance";
  case ErrorCode::unsupported_operation: return "unsupported-operation";
  case ErrorCode::empty_population: return "empty-population";
  case ErrorCode::invalid_config: return "invalid-config";
  case ErrorCode::invalid_params: return "invalid-params";
  case ErrorCode::numeric_domain: return "numeric-domain";
  case ErrorCode::invalid_panel: return "invalid-panel";
  case ErrorCode::degenerate_chain: return "degenerate-chain";
  case ErrorCode::invalid_cost: return "invalid-cost";
  case ErrorCode::insufficient_replication: return "insufficient-replication";
  case ErrorCode::nonconvergence: return "nonconvergence";
  case ErrorCode::factorization: return "factorization";
  case ErrorCode::io: return "io";
  case ErrorCode::validation: return "validation";
  }
  return "unknown";
}

Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_id)
{
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x5eedu};
  return Rng(seq);
}

} // namespace submc
