// Command-line front end: submc <generate|run|compare|scaling-study> CONFIG [--set key=value]...

#include "submc/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace
{

struct Command
{
  std::string name;
  std::string help;
  int (*run)(const submc::Json&);
  submc::Json (*resolve)(const submc::Json&);
};

} // namespace

int main(int argc, char** argv)
{
  const std::vector<Command> commands{
    {"generate", "Simulate a dataset and write it as CSV", submc::cmd_generate,
     submc::resolve_generate_spec},
    {"run", "Run one chain; writes trace, report and manifest", submc::cmd_run,
     submc::resolve_run_spec},
    {"compare", "Run several chains on one dataset against a baseline", submc::cmd_compare,
     submc::resolve_compare_spec},
    {"scaling-study", "Fractional error of the likelihood estimator over a grid of m",
     submc::cmd_scaling_study, submc::resolve_scaling_spec},
  };

  CLI::App app{"Pseudo-marginal MCMC with data subsampling"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  bool resolve_only = false;
  std::vector<CLI::App*> subs;
  for(const auto& c : commands)
  {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("config", config, "JSON spec, or a manifest from an earlier run")
      ->required()
      ->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "Override one field, e.g. engine.seed=3");
    sub->add_flag("--resolve", resolve_only, "Print the spec with every default filled in and exit");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for(std::size_t i = 0; i < commands.size(); ++i)
  {
    if(!subs[i]->parsed())
      continue;
    try
    {
      submc::Json spec = submc::load_spec(config);
      for(const auto& o : overrides)
        submc::apply_override(spec, o);
      if(resolve_only)
      {
        std::cout << commands[i].resolve(spec).dump(2) << "\n";
        return 0;
      }
      return commands[i].run(spec);
    }
    catch(const submc::Error& e)
    {
      std::cerr << submc::error_json(e.code(), e.what()).dump() << "\n";
      return 2;
    }
  }
  return 1;
}
