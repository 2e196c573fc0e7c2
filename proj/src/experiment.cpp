#include "submc/experiment.hpp"

#include "submc/datasets.hpp"
#include "submc/io.hpp"
#include "submc/mode.hpp"
#include "submc/weibull.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace submc
{

namespace
{

[[noreturn]] void invalid(const std::string& field, const std::string& why)
{
  throw Error(ErrorCode::validation, field + ": " + why);
}

/// Reads the fields of one spec block, records each resolved value in `out`
/// and rejects fields nobody asked for.
class Block
{
public:
  Block(const Json& raw, std::string path) : path_(std::move(path))
  {
    if(raw.is_null())
      raw_ = Json::object();
    else if(raw.is_object())
      raw_ = raw;
    else
      invalid(path_, "must be an object");
  }

  bool has(const std::string& key) const { return raw_.contains(key) && !raw_[key].is_null(); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback)
  {
    const Json& v = take(key);
    double x = fallback;
    if(!v.is_null())
    {
      if(!v.is_number())
        invalid(field(key), "must be a number");
      x = v.get<double>();
    }
    if(!std::isfinite(x))
      invalid(field(key), "must be finite");
    out[key] = x;
    return x;
  }

  std::optional<double> optional_number(const std::string& key)
  {
    const Json& v = take(key);
    if(v.is_null())
    {
      out[key] = nullptr;
      return std::nullopt;
    }
    if(!v.is_number() || !std::isfinite(v.get<double>()))
      invalid(field(key), "must be a finite number or null");
    out[key] = v.get<double>();
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback)
  {
    const Json& v = take(key);
    std::int64_t x = fallback;
    if(!v.is_null())
    {
      if(!v.is_number_integer())
        invalid(field(key), "must be an integer");
      x = v.get<std::int64_t>();
    }
    out[key] = x;
    return x;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback)
  {
    const Json& v = take(key);
    std::uint64_t x = fallback;
    if(!v.is_null())
    {
      if(!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        invalid(field(key), "must be a non-negative integer");
      x = v.get<std::uint64_t>();
    }
    out[key] = x;
    return x;
  }

  bool flag(const std::string& key, bool fallback)
  {
    const Json& v = take(key);
    bool x = fallback;
    if(!v.is_null())
    {
      if(!v.is_boolean())
        invalid(field(key), "must be true or false");
      x = v.get<bool>();
    }
    out[key] = x;
    return x;
  }

  std::string text(const std::string& key, const std::string& fallback,
                   std::initializer_list<std::string_view> allowed = {})
  {
    const Json& v = take(key);
    std::string x = fallback;
    if(!v.is_null())
    {
      if(!v.is_string())
        invalid(field(key), "must be a string");
      x = v.get<std::string>();
    }
    if(allowed.size() != 0 && std::find(allowed.begin(), allowed.end(), x) == allowed.end())
    {
      std::string list;
      for(auto a : allowed)
        list += (list.empty() ? "" : ", ") + std::string(a);
      invalid(field(key), "'" + x + "' is not one of " + list);
    }
    out[key] = x;
    return x;
  }

  std::optional<std::vector<double>> numbers(const std::string& key)
  {
    const Json& v = take(key);
    if(v.is_null())
    {
      out[key] = nullptr;
      return std::nullopt;
    }
    if(!v.is_array())
      invalid(field(key), "must be an array of numbers");
    std::vector<double> xs;
    for(const auto& e : v)
    {
      if(!e.is_number())
        invalid(field(key), "must be an array of numbers");
      xs.push_back(e.get<double>());
    }
    out[key] = xs;
    return xs;
  }

  /// Raw sub-value for blocks resolved elsewhere.
  const Json& raw(const std::string& key) { return take(key); }

  void finish() const
  {
    for(const auto& [key, value] : raw_.items())
      if(!seen_.contains(key))
        invalid(field(key), "unknown field");
  }

  Json out = Json::object();

private:
  const Json& take(const std::string& key)
  {
    seen_.insert(key);
    static const Json null_value;
    auto it = raw_.find(key);
    return it == raw_.end() ? null_value : *it;
  }

  Json raw_;
  std::string path_;
  std::set<std::string> seen_;
};

Json to_json(const Vector& v)
{
  Json a = Json::array();
  for(Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v[i]);
  return a;
}

Vector to_vector(const Json& a)
{
  Vector v(static_cast<Eigen::Index>(a.size()));
  for(std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

std::vector<double> default_theta(const std::string& kind)
{
  if(kind == "logistic")
    return {-0.5, 0.6, -0.4, 0.6, -0.4};
  if(kind == "ar1")
    return {0.3, 0.6};
  if(kind == "weibull")
    return {-2.0, 0.3, 0.2, 0.1, std::log(0.5)};
  return {0.0};
}

std::int64_t default_size(const std::string& kind)
{
  if(kind == "ar1")
    return 10000;
  if(kind == "weibull")
    return 200;
  return 1000;
}

std::size_t expected_dim(const std::string& kind, std::size_t generator_dim)
{
  if(kind == "ar1")
    return 2;
  if(kind == "normal")
    return 1;
  return generator_dim;
}

Json resolve_model(const Json& raw, bool need_generator)
{
  Block b(raw, "model");
  const std::string kind = b.text("kind", "", {"logistic", "ar1", "normal", "weibull"});

  std::string dataset = need_generator ? "" : b.text("dataset", "");
  if(!dataset.empty())
    b.out["dataset"] = std::filesystem::absolute(dataset).lexically_normal().string();

  std::size_t generator_dim = 0;
  if(dataset.empty())
  {
    Block g(b.raw("generator"), "model.generator");
    g.seed("seed", 1);
    const auto n = g.integer(kind == "weibull" ? "subjects" : "n", default_size(kind));
    if(n < (kind == "ar1" ? 3 : 1))
      invalid(g.field(kind == "weibull" ? "subjects" : "n"), "must be positive");
    auto theta = g.numbers("theta");
    if(!theta)
      theta = default_theta(kind);
    g.out["theta"] = *theta;
    generator_dim = theta->size();
    if(kind == "ar1" && theta->size() != 2)
      invalid("model.generator.theta", "AR(1) has two parameters");
    if(kind == "normal" && theta->size() != 1)
      invalid("model.generator.theta", "the normal model has one parameter");
    if(kind == "weibull")
    {
      if(theta->size() < 3 || theta->size() % 2 == 0)
        invalid("model.generator.theta", "Weibull needs 2p + 1 entries");
      if(g.integer("periods", 10) < 1)
        invalid("model.generator.periods", "must be positive");
    }
    g.finish();
    b.out["generator"] = g.out;
  }
  else
  {
    b.raw("generator");
    b.out["generator"] = nullptr;
  }

  if(kind == "logistic" || kind == "weibull")
  {
    if(!(b.number("prior_variance", 10.0) > 0.0))
      invalid("model.prior_variance", "must be positive");
  }
  if(kind == "ar1")
  {
    if(!(b.number("nu", 5.0) > 0.0))
      invalid("model.nu", "must be positive");
    b.text("parameterization", "standard", {"standard", "steady-state"});
  }
  if(kind == "normal")
  {
    if(!(b.number("sigma", 1.0) > 0.0))
      invalid("model.sigma", "must be positive");
    b.number("prior_mean", 0.0);
    if(!(b.number("prior_sd", 10.0) > 0.0))
      invalid("model.prior_sd", "must be positive");
  }
  if(kind == "weibull")
  {
    Block g(b.raw("grid"), "model.grid");
    if(!(g.number("exact_step", 0.01) > 0.0) || !(g.number("coarse_step", 0.5) > 0.0) ||
       !(g.number("halfwidth", 6.0) > 0.0))
      invalid("model.grid", "steps and half-width must be positive");
    g.finish();
    b.out["grid"] = g.out;
  }

  auto init = b.numbers("init");
  if(init && generator_dim != 0 && init->size() != expected_dim(kind, generator_dim))
    invalid("model.init", "has the wrong number of entries");
  b.finish();
  return b.out;
}

Json resolve_output(const Json& raw, const std::string& fallback_dir)
{
  Block b(raw, "output");
  if(b.text("directory", fallback_dir).empty())
    invalid("output.directory", "must not be empty");
  if(b.integer("kde_bins", 100) < 2)
    invalid("output.kde_bins", "must be at least 2");
  b.finish();
  return b.out;
}

std::string default_variates(const std::string& model_kind, const std::string& estimator)
{
  if(model_kind == "weibull")
    return "numerical";
  return estimator == "hh-pps" ? "thin-plate" : "taylor";
}

Json resolve_estimator(const Json& raw, const std::string& model_kind, bool scaling)
{
  Block b(raw, "estimator");
  const std::string kind = scaling ? "de-srs" : b.text("kind", "exact", {"exact", "de-srs", "hh-pps"});
  if(scaling)
    b.out["kind"] = kind;
  b.text("variates", default_variates(model_kind, kind),
         {"none", "sign-split", "taylor", "thin-plate", "gp", "numerical"});
  if(!(b.number("epsilon", 0.5) > 0.0))
    invalid("estimator.epsilon", "must be positive");
  b.flag("fixed_hessian", false);
  b.text("sidecar", "");
  {
    Block s(b.raw("surface"), "estimator.surface");
    if(s.integer("knots", 50) < 1)
      invalid("estimator.surface.knots", "must be positive");
    const double tf = s.number("training_fraction", 0.1);
    if(!(tf > 0.0 && tf < 1.0))
      invalid("estimator.surface.training_fraction", "must lie in (0, 1)");
    s.flag("residual_adjustment", false);
    s.seed("seed", 1);
    s.finish();
    b.out["surface"] = s.out;
  }
  if(scaling)
  {
    b.finish();
    return b.out;
  }

  if(b.integer("m", 0) < 0)
    invalid("estimator.m", "must be non-negative");
  const double f = b.number("fraction", 0.05);
  if(!(f > 0.0 && f <= 1.0))
    invalid("estimator.fraction", "must lie in (0, 1]");
  if(!(b.number("target_sigma2", 1.0) > 0.0))
    invalid("estimator.target_sigma2", "must be positive");
  const bool calibrate = b.flag("calibrate", false);
  if(calibrate && kind != "de-srs")
    invalid("estimator.calibrate", "only de-srs subsample sizes are calibrated");
  if(b.integer("pilots", 100) < 1)
    invalid("estimator.pilots", "must be positive");
  auto v_max = b.optional_number("v_max");
  if(v_max && !(*v_max > 0.0))
    invalid("estimator.v_max", "must be positive");
  const double omega = b.number("omega", 1.0);
  if(!(omega > 0.0 && omega <= 1.0))
    invalid("estimator.omega", "must lie in (0, 1]");

  const Json& corr = b.raw("correlation");
  if(corr.is_null())
    b.out["correlation"] = nullptr;
  else
  {
    Block c(corr, "estimator.correlation");
    const bool phi = c.has("phi");
    const bool kappa = c.has("kappa");
    if(phi == kappa)
      invalid("estimator.correlation", "give exactly one of phi and kappa");
    const double value = phi ? c.number("phi", 0.0) : c.number("kappa", 0.0);
    if(!(value >= 0.0 && value <= 1.0))
      invalid(c.field(phi ? "phi" : "kappa"), "must lie in [0, 1]");
    c.finish();
    b.out["correlation"] = c.out;
    if(kind != "de-srs")
      invalid("estimator.correlation", "correlated subsamples require de-srs");
    if(v_max)
      invalid("estimator.correlation", "cannot be combined with v_max");
  }
  if(kind == "hh-pps" && omega != 1.0)
    invalid("estimator.omega", "hh-pps redraws the subsample every iteration (omega = 1)");
  b.finish();
  return b.out;
}

Json resolve_engine(const Json& raw, const std::string& estimator)
{
  Block b(raw, "engine");
  if(b.integer("iterations", 10000) < 1)
    invalid("engine.iterations", "must be positive");
  const double burn = b.number("burnin_fraction", 0.1);
  if(!(burn >= 0.0 && burn < 1.0))
    invalid("engine.burnin_fraction", "must lie in [0, 1)");
  const std::string proposal = b.text("proposal", "rwm", {"rwm", "imh"});
  if(proposal == "imh" && estimator == "hh-pps")
    invalid("engine.proposal", "imh is not offered with hh-pps");
  const double target = b.number("target_acceptance", estimator == "exact" ? 0.35 : 0.15);
  if(!(target > 0.0 && target < 1.0))
    invalid("engine.target_acceptance", "must lie in (0, 1)");
  auto scale = b.optional_number("initial_scale");
  if(scale && !(*scale > 0.0))
    invalid("engine.initial_scale", "must be positive");
  if(b.integer("adapt_batch", 50) < 1)
    invalid("engine.adapt_batch", "must be positive");
  if(!(b.number("imh_dof", 10.0) > 0.0))
    invalid("engine.imh_dof", "must be positive");
  if(b.integer("max_adapt_rounds", 10) < 0)
    invalid("engine.max_adapt_rounds", "must be non-negative");
  b.seed("seed", 1);
  b.finish();
  return b.out;
}

Json resolve_run_body(const Json& raw, bool with_output)
{
  Block b(raw, "");
  b.text("label", "");
  Json model = resolve_model(b.raw("model"), false);
  b.out["model"] = model;
  Json estimator = resolve_estimator(b.raw("estimator"), model["kind"], false);
  b.out["estimator"] = estimator;
  b.out["engine"] = resolve_engine(b.raw("engine"), estimator["kind"]);
  if(with_output)
    b.out["output"] = resolve_output(b.raw("output"), "submc-run");
  b.finish();
  return b.out;
}

ArParameterization parameterization(const Json& model)
{
  return model["parameterization"] == "steady-state" ? ArParameterization::steady_state
                                                     : ArParameterization::standard;
}

void write_json(const std::filesystem::path& path, const Json& j)
{
  write_file_atomic(path, j.dump(2) + "\n");
}

int report_error(ErrorCode code, const std::string& message)
{
  std::cerr << error_json(code, message).dump() << "\n";
  return code == ErrorCode::validation || code == ErrorCode::io || code == ErrorCode::invalid_config
           ? 2
           : 3;
}

template <typename F>
int guarded(F&& body)
{
  try
  {
    return body();
  }
  catch(const Error& e)
  {
    return report_error(e.code(), e.what());
  }
  catch(const std::filesystem::filesystem_error& e)
  {
    return report_error(ErrorCode::io, e.what());
  }
}

std::filesystem::path output_dir(const Json& spec)
{
  std::filesystem::path dir = spec["output"]["directory"].get<std::string>();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if(ec)
    throw Error(ErrorCode::io, dir.string() + ": " + ec.message());
  return dir;
}

std::string csv_row(std::initializer_list<std::string> cells)
{
  std::string line;
  bool first = true;
  for(const auto& c : cells)
  {
    if(!first)
      line += ',';
    line += c;
    first = false;
  }
  return line + "\n";
}

std::string num(double x)
{
  return std::isfinite(x) ? format_double(x) : "nan";
}

std::string num(std::size_t x)
{
  return std::to_string(x);
}

Json efficiency_json(const EfficiencyReport& r)
{
  Json j;
  j["draws"] = r.draws;
  j["inefficiency"] = r.inefficiency;
  j["effective_sample_size"] = r.effective_sample_size;
  j["cost"] = r.cost;
  j["effective_draws"] = r.effective_draws;
  if(!r.relative_effective_draws.empty())
  {
    j["relative_effective_draws"] = r.relative_effective_draws;
    j["relative_inefficiency"] = r.relative_inefficiency;
  }
  j["mean_sampling_fraction"] = r.mean_sampling_fraction;
  return j;
}

std::string density_csv(const std::vector<std::string>& labels,
                        const std::vector<PosteriorComparison>& comparisons)
{
  std::string out = "run,parameter,centre,density,baseline_density\n";
  for(std::size_t r = 0; r < comparisons.size(); ++r)
  {
    const auto& d = comparisons[r].density;
    for(std::size_t i = 0; i < d.centre.size(); ++i)
      out += csv_row({labels[r], num(d.parameter[i]), num(d.centre[i]), num(d.density_a[i]),
                      num(d.density_b[i])});
  }
  return out;
}

} // namespace

// ---------------------------------------------------------------------------

Json error_json(ErrorCode code, const std::string& message)
{
  Json j;
  j["error"]["code"] = std::string(to_string(code));
  j["error"]["message"] = message;
  return j;
}

Json load_spec(const std::filesystem::path& path)
{
  Json j;
  try
  {
    j = Json::parse(read_file(path));
  }
  catch(const Json::parse_error& e)
  {
    throw Error(ErrorCode::validation, path.string() + ": " + e.what());
  }
  if(j.is_object() && j.contains("spec") && j.contains("files"))
    return j["spec"];
  return j;
}

void apply_override(Json& spec, std::string_view assignment)
{
  const auto eq = assignment.find('=');
  if(eq == std::string_view::npos || eq == 0)
    throw Error(ErrorCode::validation, "override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  Json value;
  try
  {
    value = Json::parse(text);
  }
  catch(const Json::parse_error&)
  {
    value = text;
  }

  Json* node = &spec;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> segments;
  while(std::getline(parts, part, '.'))
    segments.push_back(part);
  for(std::size_t i = 0; i < segments.size(); ++i)
  {
    const std::string& s = segments[i];
    if(s.empty())
      throw Error(ErrorCode::validation, "override key '" + key + "' has an empty segment");
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), index);
    if(node->is_array())
    {
      if(ec != std::errc() || ptr != s.data() + s.size() || index >= node->size())
        throw Error(ErrorCode::validation, "override key '" + key + "': bad array index '" + s + "'");
      node = &(*node)[index];
    }
    else
    {
      if(node->is_null())
        *node = Json::object();
      if(!node->is_object())
        throw Error(ErrorCode::validation, "override key '" + key + "' descends into a scalar");
      node = &(*node)[s];
    }
  }
  *node = value;
}

Json resolve_generate_spec(const Json& raw)
{
  Block b(raw, "");
  b.out["model"] = resolve_model(b.raw("model"), true);
  Block o(b.raw("output"), "output");
  if(o.text("directory", "submc-data").empty())
    invalid("output.directory", "must not be empty");
  if(o.text("dataset", "data.csv").empty())
    invalid("output.dataset", "must not be empty");
  o.finish();
  b.out["output"] = o.out;
  b.finish();
  return b.out;
}

Json resolve_run_spec(const Json& raw)
{
  return resolve_run_body(raw, true);
}

Json resolve_compare_spec(const Json& raw)
{
  Block b(raw, "");
  const Json& base = b.raw("base");
  const Json& runs = b.raw("runs");
  if(!runs.is_array() || runs.size() < 2)
    invalid("runs", "needs at least two run specs");

  Json resolved = Json::array();
  for(std::size_t i = 0; i < runs.size(); ++i)
  {
    Json merged = base.is_null() ? Json::object() : base;
    merged.merge_patch(runs[i]);
    try
    {
      Json r = resolve_run_body(merged, false);
      if(r["label"] == "")
        r["label"] = "run" + std::to_string(i);
      resolved.push_back(r);
    }
    catch(const Error& e)
    {
      throw Error(e.code(), "runs." + std::to_string(i) + "." + e.what());
    }
  }
  for(std::size_t i = 1; i < resolved.size(); ++i)
    if(resolved[i]["model"] != resolved[0]["model"])
      invalid("runs." + std::to_string(i) + ".model", "all runs must share one dataset and model");

  const auto baseline = b.integer("baseline", 0);
  if(baseline < 0 || static_cast<std::size_t>(baseline) >= resolved.size())
    invalid("baseline", "must index one of the runs");
  b.out["base"] = nullptr;
  b.out["runs"] = resolved;
  b.out["output"] = resolve_output(b.raw("output"), "submc-compare");
  b.finish();
  return b.out;
}

Json resolve_scaling_spec(const Json& raw)
{
  Block b(raw, "");
  Json model = resolve_model(b.raw("model"), false);
  b.out["model"] = model;
  b.out["estimator"] = resolve_estimator(b.raw("estimator"), model["kind"], true);

  Block s(b.raw("scaling"), "scaling");
  const Json& thetas = s.raw("thetas");
  if(thetas.is_null())
    s.out["thetas"] = nullptr;
  else
  {
    if(!thetas.is_array() || thetas.empty())
      invalid("scaling.thetas", "must be a non-empty array of parameter vectors");
    for(const auto& t : thetas)
      if(!t.is_array() || t.empty() ||
         !std::all_of(t.begin(), t.end(), [](const Json& e) { return e.is_number(); }))
        invalid("scaling.thetas", "each entry must be an array of numbers");
    s.out["thetas"] = thetas;
  }
  auto offsets = s.numbers("mode_offsets");
  if(!offsets)
    s.out["mode_offsets"] = std::vector<double>{0.0, 1.0, -2.0};
  const Json& grid = s.raw("m_grid");
  std::vector<std::int64_t> ms{25, 50, 100, 200, 400, 800, 1600};
  if(!grid.is_null())
  {
    if(!grid.is_array() || grid.empty())
      invalid("scaling.m_grid", "must be a non-empty array of sizes");
    ms.clear();
    for(const auto& e : grid)
    {
      if(!e.is_number_integer() || e.get<std::int64_t>() < 2)
        invalid("scaling.m_grid", "sizes must be integers of at least 2");
      ms.push_back(e.get<std::int64_t>());
    }
  }
  s.out["m_grid"] = ms;
  if(s.integer("replications", 10000) < 100)
    invalid("scaling.replications", "must be at least 100");
  s.seed("seed", 1);
  s.finish();
  b.out["scaling"] = s.out;
  b.out["output"] = resolve_output(b.raw("output"), "submc-scaling");
  b.finish();
  return b.out;
}

// ---------------------------------------------------------------------------

Problem load_problem(const Json& block)
{
  Problem problem;
  const std::string kind = block["kind"];
  const std::string dataset = block.contains("dataset") ? block["dataset"].get<std::string>() : "";

  LogisticData logistic;
  Vector series;
  std::vector<SubjectPanel> panels;
  if(!dataset.empty())
  {
    if(kind == "logistic")
      logistic = read_logistic_csv(dataset);
    else if(kind == "weibull")
      panels = read_panels_csv(dataset);
    else
      series = read_series_csv(dataset);
    problem.dataset_hash = file_hash(dataset);
  }
  else
  {
    const Json& g = block["generator"];
    Rng rng = make_stream(g["seed"].get<std::uint64_t>(), 0);
    const Vector theta = to_vector(g["theta"]);
    problem.truth = theta;
    if(kind == "logistic")
      logistic = generate_logistic(theta, g["n"].get<std::size_t>(), rng);
    else if(kind == "ar1")
      series = generate_ar1(theta, parameterization(block), g["n"].get<std::size_t>(),
                            block["nu"].get<double>(), rng);
    else if(kind == "normal")
      series = generate_normal(theta[0], block["sigma"].get<double>(), g["n"].get<std::size_t>(), rng);
    else
      panels = generate_weibull(theta, g["subjects"].get<std::size_t>(),
                                g["periods"].get<std::size_t>(), rng);
    problem.dataset_hash = hex64(fnv1a(g.dump()));
  }

  if(kind == "logistic")
    problem.model =
      std::make_unique<LogisticModel>(std::move(logistic), block["prior_variance"].get<double>());
  else if(kind == "ar1")
    problem.model = std::make_unique<Ar1Model>(std::move(series), parameterization(block),
                                               block["nu"].get<double>());
  else if(kind == "normal")
    problem.model = std::make_unique<NormalModel>(std::move(series), block["sigma"].get<double>(),
                                                  block["prior_mean"].get<double>(),
                                                  block["prior_sd"].get<double>());
  else
  {
    const Json& grid = block["grid"];
    const double w = grid["halfwidth"];
    problem.model = std::make_unique<WeibullModel>(
      std::move(panels), WeibullGrid{grid["exact_step"].get<double>(), w},
      WeibullGrid{grid["coarse_step"].get<double>(), w}, block["prior_variance"].get<double>());
  }
  problem.population = Population::of(*problem.model);
  if(problem.population.size() == 0)
    throw Error(ErrorCode::empty_population, "no elements are left to subsample");
  return problem;
}

ModeResult locate_mode(const Problem& problem, const Json& block)
{
  const Model& model = *problem.model;
  Vector init;
  if(!block["init"].is_null())
    init = to_vector(block["init"]);
  else if(problem.truth)
    init = *problem.truth;
  else
  {
    init = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
    if(block["kind"] == "ar1")
      init[1] = 0.5;
  }
  if(static_cast<std::size_t>(init.size()) != model.dim())
    throw Error(ErrorCode::validation, "model.init: expected " + std::to_string(model.dim()) + " entries");

  auto log_post = [&model](const Vector& t)
  {
    const double prior = model.log_prior(t);
    return std::isfinite(prior) ? prior + model.full_loglik(t) : prior;
  };
  try
  {
    return find_mode_and_curvature(log_post, init);
  }
  catch(const NonConvergence& e)
  {
    // Use the best point reached if the curvature there is usable.
    ModeResult r;
    r.theta = e.best();
    r.log_density = log_post(r.theta);
    const Matrix neg = -numeric_hessian(log_post, r.theta);
    Eigen::LLT<Matrix> llt(neg);
    if(llt.info() != Eigen::Success)
      throw;
    r.covariance = llt.solve(Matrix::Identity(neg.rows(), neg.cols()));
    r.covariance = 0.5 * (r.covariance + r.covariance.transpose()).eval();
    r.scaled_gradient = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
}

std::unique_ptr<ControlVariates> make_variates(const std::string& method, const Json& est,
                                               const Problem& problem, const Vector& mode)
{
  const Model& model = *problem.model;
  const Population& pop = problem.population;
  if(method == "none")
    return std::make_unique<ZeroVariates>();
  if(method == "sign-split")
    return std::make_unique<ShiftVariates>(model, pop);
  if(method == "taylor")
  {
    TaylorOptions o;
    o.epsilon = est["epsilon"];
    if(est["fixed_hessian"].get<bool>())
      o.fixed_hessian_at = mode;
    o.sidecar = est["sidecar"].get<std::string>();
    return std::make_unique<TaylorVariates>(model, pop, o);
  }
  if(method == "numerical")
    return std::make_unique<NumericalVariates>(model, pop);

  const Json& s = est["surface"];
  SurfaceOptions o;
  o.method = method == "gp" ? SurfaceMethod::gaussian_process : SurfaceMethod::thin_plate;
  o.knots = s["knots"];
  o.residual_adjustment = s["residual_adjustment"];
  o.seed = s["seed"];
  return std::make_unique<SurfaceVariates>(model, pop, mode, s["training_fraction"].get<double>(), o);
}

EngineConfig engine_config(const Json& spec, const Problem& problem, ControlVariates* variates,
                           const Vector& mode)
{
  const Json& est = spec["estimator"];
  const Json& eng = spec["engine"];
  const std::size_t n = problem.population.size();

  EngineConfig c;
  c.iterations = eng["iterations"];
  c.burnin_fraction = eng["burnin_fraction"];
  c.proposal = proposal_kind_from(eng["proposal"]);
  c.estimator = estimator_kind_from(est["kind"]);
  c.omega = est["omega"];
  c.target_acceptance = eng["target_acceptance"];
  c.initial_scale = eng["initial_scale"].is_null() ? 0.0 : eng["initial_scale"].get<double>();
  c.adapt_batch = eng["adapt_batch"];
  c.imh_dof = eng["imh_dof"];
  c.max_adapt_rounds = eng["max_adapt_rounds"];
  c.seed = eng["seed"];
  if(!est["v_max"].is_null())
    c.v_max = est["v_max"].get<double>();

  std::size_t m = est["m"];
  if(m == 0)
    m = static_cast<std::size_t>(std::llround(est["fraction"].get<double>() * static_cast<double>(n)));
  m = std::clamp<std::size_t>(m, 2, std::max<std::size_t>(n, 2));
  if(est["calibrate"].get<bool>() && variates)
  {
    Rng rng = make_stream(c.seed, 4);
    m = calibrate_subsample_size(*problem.model, problem.population, *variates, mode,
                                 est["target_sigma2"].get<double>(), m, est["pilots"], rng);
  }
  c.subsample_size = m;

  const Json& corr = est["correlation"];
  if(!corr.is_null())
  {
    const double fraction = static_cast<double>(m) / static_cast<double>(n);
    if(!(fraction < 1.0))
      throw Error(ErrorCode::validation, "estimator.correlation: m must be below the population size");
    c.correlation = corr.contains("phi") ? CorrelationParams::from_phi(corr["phi"], fraction)
                                         : CorrelationParams::from_kappa(corr["kappa"], fraction);
  }
  c.validate();
  return c;
}

std::string trace_csv(const Trace& trace)
{
  std::string out = "iteration";
  for(Eigen::Index j = 0; j < trace.draws.cols(); ++j)
    out += ",theta" + std::to_string(j);
  out += ",accepted,refreshed,m,sigma2,sigma2_before,adapt_rounds,cumulative_cost\n";
  for(std::size_t i = 0; i < trace.completed(); ++i)
  {
    const auto& r = trace.records[i];
    out += std::to_string(i);
    for(Eigen::Index j = 0; j < trace.draws.cols(); ++j)
      out += "," + num(trace.draws(static_cast<Eigen::Index>(i), j));
    out += csv_row({"", r.accepted ? "1" : "0", r.refreshed ? "1" : "0", num(r.m), num(r.sigma2),
                    num(r.sigma2_before), num(r.adapt_rounds), num(r.cumulative_cost)});
  }
  return out;
}

RunOutcome execute_run(const Json& spec, const Problem& problem, const EfficiencyReport* baseline)
{
  const Model& model = *problem.model;
  const Json& est = spec["estimator"];
  const ModeResult mode = locate_mode(problem, spec["model"]);

  const std::string kind = est["kind"];
  const std::string method = est["variates"];
  std::unique_ptr<ControlVariates> variates;
  std::unique_ptr<ControlVariates> weights;
  if(kind == "de-srs")
    variates = make_variates(method, est, problem, mode.theta);
  else if(kind == "hh-pps")
  {
    weights = make_variates(method, est, problem, mode.theta);
    if(!weights->provides_weights())
      throw Error(ErrorCode::validation,
                  "estimator.variates: '" + method + "' cannot serve as PPS size measures");
    if(model.has_sign_split())
      variates = std::make_unique<ShiftVariates>(model, problem.population);
    else
      variates = std::make_unique<ZeroVariates>();
  }

  const EngineConfig config = engine_config(spec, problem, variates.get(), mode.theta);
  ChainSetup setup;
  setup.model = &model;
  setup.population = &problem.population;
  setup.variates = variates.get();
  setup.weight_proxy = weights.get();
  setup.theta_init = mode.theta;
  setup.sigma = mode.covariance;
  setup.mode = mode.theta;

  RunOutcome out;
  out.trace = run_chain(setup, config);
  const Trace& t = out.trace;
  const bool seconds = model.cost_model() == CostModel::wall_time;
  out.cost = seconds ? t.kept_seconds() : t.kept_cost();
  const double fraction = kind == "exact" ? 1.0 : t.mean_sampling_fraction(problem.population.size());

  Json& r = out.report;
  r["label"] = spec["label"];
  r["model"] = model.name();
  r["estimator"] = kind;
  r["variates"] = kind == "exact" ? Json(nullptr) : Json(method);
  r["population"] = problem.population.size();
  r["always_evaluated"] = problem.population.always.size();
  r["subsample_size"] = config.subsample_size;
  if(config.correlation)
    r["kappa"] = config.correlation->kappa;
  r["target_acceptance"] = config.resolved_target_acceptance();
  r["initial_scale"] = config.resolved_initial_scale(model.dim());
  r["final_scale"] = t.final_scale;
  r["mode"] = to_json(mode.theta);
  r["mode_converged"] = std::isfinite(mode.scaled_gradient);
  r["iterations_completed"] = t.completed();
  r["burnin"] = t.burnin;
  r["acceptance_rate"] = t.acceptance_rate();
  r["mean_sampling_fraction"] = fraction;
  r["estimator_calls"] = t.estimator_calls;
  r["current_recomputations"] = t.current_recomputations;

  std::size_t rounds = 0, adapted = 0, capped = 0;
  double sigma2 = 0.0;
  for(const auto& rec : t.records)
  {
    rounds += rec.adapt_rounds;
    adapted += rec.adapt_rounds > 0;
    capped += rec.adapt_capped;
    sigma2 += rec.sigma2;
  }
  r["adaptation"] = {{"rounds", rounds}, {"iterations_adapted", adapted}, {"capped", capped}};
  r["mean_sigma2"] = t.records.empty() ? 0.0 : sigma2 / static_cast<double>(t.records.size());
  r["cost"] = {{"unit", seconds ? "seconds" : "evaluations"}, {"value", out.cost}};
  r["elapsed_seconds"] = t.wall_seconds;

  const Matrix kept = t.kept();
  if(kept.rows() > 0)
  {
    const Vector mean = kept.colwise().mean();
    const Vector sd = ((kept.rowwise() - mean.transpose()).array().square().colwise().sum() /
                       std::max<double>(1.0, static_cast<double>(kept.rows() - 1)))
                        .sqrt();
    r["posterior"] = {{"mean", to_json(mean)}, {"sd", to_json(sd)}};
  }
  try
  {
    out.efficiency = efficiency_report(kept, out.cost, fraction, baseline);
    r["efficiency"] = efficiency_json(*out.efficiency);
  }
  catch(const Error& e)
  {
    r["efficiency"] = nullptr;
    r["efficiency_error"] = error_json(e.code(), e.what())["error"];
  }
  r["error"] = t.error ? Json(*t.error) : Json(nullptr);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_generate(const Json& raw)
{
  return guarded(
    [&]
    {
      const Json spec = resolve_generate_spec(raw);
      const Json& model = spec["model"];
      const Json& g = model["generator"];
      const auto dir = output_dir(spec);
      const auto path = dir / spec["output"]["dataset"].get<std::string>();

      Rng rng = make_stream(g["seed"].get<std::uint64_t>(), 0);
      const Vector theta = to_vector(g["theta"]);
      const std::string kind = model["kind"];
      if(kind == "logistic")
        write_logistic_csv(path, generate_logistic(theta, g["n"].get<std::size_t>(), rng));
      else if(kind == "ar1")
        write_series_csv(path, generate_ar1(theta, parameterization(model), g["n"].get<std::size_t>(),
                                            model["nu"].get<double>(), rng));
      else if(kind == "normal")
        write_series_csv(path, generate_normal(theta[0], model["sigma"].get<double>(),
                                               g["n"].get<std::size_t>(), rng));
      else
        write_panels_csv(path, generate_weibull(theta, g["subjects"].get<std::size_t>(),
                                                g["periods"].get<std::size_t>(), rng));

      Json provenance;
      provenance["spec"] = spec;
      provenance["seed"] = g["seed"];
      provenance["theta"] = g["theta"];
      provenance["files"][path.filename().string()] = file_hash(path);
      write_json(dir / "provenance.json", provenance);
      return 0;
    });
}

int cmd_run(const Json& raw)
{
  return guarded(
    [&]
    {
      const Json spec = resolve_run_spec(raw);
      const auto dir = output_dir(spec);
      Json manifest;
      manifest["spec"] = spec;
      try
      {
        const Problem problem = load_problem(spec["model"]);
        manifest["dataset_hash"] = problem.dataset_hash;
        RunOutcome run = execute_run(spec, problem);

        write_file_atomic(dir / "trace.csv", trace_csv(run.trace));
        write_json(dir / "report.json", run.report);
        manifest["files"]["trace.csv"] = file_hash(dir / "trace.csv");
        manifest["files"]["report.json"] = file_hash(dir / "report.json");
        write_json(dir / "manifest.json", manifest);
        if(run.trace.error)
        {
          std::cerr << Json{{"error", {{"code", "aborted"}, {"message", *run.trace.error}}}}.dump()
                    << "\n";
          return 3;
        }
        return 0;
      }
      catch(const Error& e)
      {
        write_json(dir / "error.json", error_json(e.code(), e.what()));
        throw;
      }
    });
}

int cmd_compare(const Json& raw)
{
  return guarded(
    [&]
    {
      const Json spec = resolve_compare_spec(raw);
      const auto dir = output_dir(spec);
      const Json& runs = spec["runs"];
      const std::size_t base = spec["baseline"];
      const Problem problem = load_problem(runs[0]["model"]);

      std::vector<RunOutcome> outcomes(runs.size());
      outcomes[base] = execute_run(runs[base], problem);
      if(!outcomes[base].efficiency)
        throw Error(ErrorCode::insufficient_sample, "baseline run has no efficiency report");
      const EfficiencyReport baseline = *outcomes[base].efficiency;
      outcomes[base].efficiency =
        efficiency_report(outcomes[base].trace.kept(), outcomes[base].cost,
                          baseline.mean_sampling_fraction, &baseline);
      outcomes[base].report["efficiency"] = efficiency_json(*outcomes[base].efficiency);
      for(std::size_t i = 0; i < runs.size(); ++i)
        if(i != base)
          outcomes[i] = execute_run(runs[i], problem, &baseline);

      Json manifest;
      manifest["spec"] = spec;
      manifest["dataset_hash"] = problem.dataset_hash;

      std::vector<std::string> labels;
      std::vector<PosteriorComparison> comparisons;
      const Matrix base_draws = outcomes[base].trace.kept();
      std::string efficiency = "run,parameter,inefficiency,ess,effective_draws,red,rif\n";
      std::string fractions = "run,estimator,omega,mean_sampling_fraction,acceptance_rate,cost\n";
      std::string summary = "run,parameter,mean_difference,sd_ratio,ks\n";
      Json reports = Json::array();
      int status = 0;
      for(std::size_t i = 0; i < runs.size(); ++i)
      {
        const RunOutcome& o = outcomes[i];
        const std::string label = runs[i]["label"];
        labels.push_back(label);
        const std::string trace_name = "trace_" + label + ".csv";
        write_file_atomic(dir / trace_name, trace_csv(o.trace));
        manifest["files"][trace_name] = file_hash(dir / trace_name);
        if(o.trace.error)
          status = 3;

        if(o.efficiency)
          for(std::size_t j = 0; j < o.efficiency->inefficiency.size(); ++j)
            efficiency += csv_row({label, num(j), num(o.efficiency->inefficiency[j]),
                                   num(o.efficiency->effective_sample_size[j]),
                                   num(o.efficiency->effective_draws[j]),
                                   num(o.efficiency->relative_effective_draws[j]),
                                   num(o.efficiency->relative_inefficiency[j])});
        fractions += csv_row({label, runs[i]["estimator"]["kind"],
                              num(runs[i]["estimator"]["omega"].get<double>()),
                              num(o.report["mean_sampling_fraction"].get<double>()),
                              num(o.report["acceptance_rate"].get<double>()), num(o.cost)});

        Json report = o.report;
        const Matrix draws = o.trace.kept();
        if(draws.rows() > 1 && base_draws.rows() > 1)
        {
          comparisons.push_back(
            compare_posteriors(draws, base_draws, spec["output"]["kde_bins"].get<std::size_t>()));
          Json cmp = Json::array();
          for(std::size_t j = 0; j < comparisons.back().parameters.size(); ++j)
          {
            const auto& c = comparisons.back().parameters[j];
            summary += csv_row({label, num(j), num(c.mean_difference), num(c.sd_ratio), num(c.ks)});
            cmp.push_back({{"mean_difference", c.mean_difference}, {"sd_ratio", c.sd_ratio}, {"ks", c.ks}});
          }
          report["comparison"] = cmp;
        }
        else
        {
          comparisons.emplace_back();
        }
        reports.push_back(report);
      }

      const std::vector<std::pair<std::string, std::string>> tables{
        {"efficiency.csv", efficiency},
        {"fractions.csv", fractions},
        {"comparison.csv", summary},
        {"kde.csv", density_csv(labels, comparisons)}};
      for(const auto& [name, body] : tables)
      {
        write_file_atomic(dir / name, body);
        manifest["files"][name] = file_hash(dir / name);
      }
      write_json(dir / "report.json", Json{{"baseline", runs[base]["label"]}, {"runs", reports}});
      manifest["files"]["report.json"] = file_hash(dir / "report.json");
      write_json(dir / "manifest.json", manifest);
      return status;
    });
}

int cmd_scaling_study(const Json& raw)
{
  return guarded(
    [&]
    {
      const Json spec = resolve_scaling_spec(raw);
      const auto dir = output_dir(spec);
      const Problem problem = load_problem(spec["model"]);
      const Json& s = spec["scaling"];

      ScalingOptions options;
      if(!s["thetas"].is_null())
      {
        for(const auto& t : s["thetas"])
        {
          options.thetas.push_back(to_vector(t));
          if(static_cast<std::size_t>(options.thetas.back().size()) != problem.model->dim())
            throw Error(ErrorCode::validation, "scaling.thetas: wrong number of entries");
        }
      }
      const ModeResult mode = locate_mode(problem, spec["model"]);
      if(s["thetas"].is_null())
      {
        const Vector sd = mode.covariance.diagonal().cwiseSqrt();
        for(const auto& off : s["mode_offsets"])
          options.thetas.push_back(mode.theta + off.get<double>() * sd);
      }
      for(const auto& m : s["m_grid"])
        options.m_grid.push_back(m.get<std::size_t>());
      options.replications = s["replications"];
      options.seed = s["seed"];

      auto variates = make_variates(spec["estimator"]["variates"], spec["estimator"], problem, mode.theta);
      const ScalingTable table = error_scaling_study(*problem.model, problem.population, *variates, options);

      std::string csv = "theta_index,m,fractional_error,raw_error,median_abs_error,mean_sigma2\n";
      for(const auto& row : table.rows)
        csv += csv_row({num(row.theta_index), num(row.m), num(row.fractional_error), num(row.raw_error),
                        num(row.median_abs_error), num(row.mean_sigma2)});
      write_file_atomic(dir / "scaling.csv", csv);

      Json report;
      Json thetas = Json::array();
      for(const auto& t : options.thetas)
        thetas.push_back(to_json(t));
      report["thetas"] = thetas;
      report["slope"] = table.slope;
      report["monotone_share"] = table.monotone_share;
      write_json(dir / "report.json", report);

      Json manifest;
      manifest["spec"] = spec;
      manifest["dataset_hash"] = problem.dataset_hash;
      manifest["files"]["scaling.csv"] = file_hash(dir / "scaling.csv");
      manifest["files"]["report.json"] = file_hash(dir / "report.json");
      write_json(dir / "manifest.json", manifest);
      return 0;
    });
}

} // namespace submc
