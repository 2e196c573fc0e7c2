#ifndef SUBMC_EXPERIMENT_HPP
#define SUBMC_EXPERIMENT_HPP

#include "submc/diagnostics.hpp"
#include "submc/engine.hpp"
#include "submc/mode.hpp"
#include "submc/models.hpp"
#include "submc/variates.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace submc
{

using Json = nlohmann::ordered_json;

/// Reads a JSON spec. A manifest written by a previous run is accepted in
/// place of the spec it records.
Json load_spec(const std::filesystem::path& path);

/// Applies "a.b.c=value" to `spec`. Numeric segments index arrays; the value
/// is parsed as JSON and taken as a plain string if that fails.
void apply_override(Json& spec, std::string_view assignment);

/// Spec resolution: validates and fills every default so the result records
/// each field explicitly. Throws Error(validation) naming the field.
Json resolve_generate_spec(const Json& raw);
Json resolve_run_spec(const Json& raw);
Json resolve_compare_spec(const Json& raw);
Json resolve_scaling_spec(const Json& raw);

/// A model with its data, from a resolved model block.
struct Problem
{
  std::unique_ptr<Model> model;
  Population population;
  // Generator parameter, when the data were simulated.
  std::optional<Vector> truth;
  // Content hash of the dataset.
  std::string dataset_hash;
};

Problem load_problem(const Json& model_block);

/// Posterior mode and curvature from the block's start point.
ModeResult locate_mode(const Problem& problem, const Json& model_block);

std::unique_ptr<ControlVariates> make_variates(const std::string& method, const Json& estimator,
                                               const Problem& problem, const Vector& mode);

EngineConfig engine_config(const Json& spec, const Problem& problem, ControlVariates* variates,
                           const Vector& mode);

struct RunOutcome
{
  Trace trace;
  std::optional<EfficiencyReport> efficiency;
  double cost = 0.0;
  Json report;
};

/// Runs one resolved spec against a loaded problem without writing files.
RunOutcome execute_run(const Json& spec, const Problem& problem,
                       const EfficiencyReport* baseline = nullptr);

std::string trace_csv(const Trace& trace);

/// Subcommands. Each returns the process exit status and writes its files
/// under the spec's output directory; errors go to stderr as JSON.
int cmd_generate(const Json& raw);
int cmd_run(const Json& raw);
int cmd_compare(const Json& raw);
int cmd_scaling_study(const Json& raw);

/// {"error": {"code": ..., "message": ...}}
Json error_json(ErrorCode code, const std::string& message);

} // namespace submc

#endif
