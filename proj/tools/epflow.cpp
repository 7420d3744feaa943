// Command-line front end: epflow <command> [--config PATH] [--out DIR]
// [--format csv|vtk] [--seed N], or epflow --emit-template.

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "epflow/commands.hpp"
#include "epflow/error.hpp"

using namespace epflow;

int main(int argc, char** argv) {
  CLI::App app{"Steady Euler-Poisson nozzle flow: backgrounds, fixed points and checks"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path, out_dir, format;
  long seed = -1;
  bool emit_template = false;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
  app.add_option("--format", format, "field file format (overrides [output] format)")
      ->check(CLI::IsMember({"csv", "vtk"}));
  app.add_option("--seed", seed, "random seed (overrides [run] seed)")
      ->check(CLI::Range(0L, 4294967295L));
  app.add_flag("--emit-template", emit_template, "print the documented default configuration");

  using Command = int (*)(const RunConfig&, std::ostream&);
  const std::map<std::string, std::pair<Command, const char*>> commands = {
      {"background", {cmd_background, "integrate the 1D background and write its profiles"}},
      {"solve", {cmd_solve, "Picard fixed point for the perturbed data"}},
      {"sweep", {cmd_sweep, "fixed points over [sweep] sigmas and their slope fit"}},
      {"perturb-domain", {cmd_perturb_domain, "fixed point on the nozzle deformed by [domain_map]"}},
      {"verify", {cmd_verify, "run the invariant battery"}},
  };
  for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.second);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    if (!format.empty()) cfg.output.format = format;
    if (seed >= 0) cfg.run.seed = static_cast<unsigned>(seed);
    cfg.validate();

    if (emit_template) {
      std::cout << serialize_config(cfg);
      if (app.get_subcommands().empty()) return kExitOk;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitFailure;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    return commands.at(name).first(cfg, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for_current_exception();
  }
}
