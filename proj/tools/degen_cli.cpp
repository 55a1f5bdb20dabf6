#include <iostream>

#include <CLI11.hpp>

#include "degen/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of local boundedness for degenerate quasilinear equations"};
  app.require_subcommand(1);
  std::string config;
  std::string out = "out";
  int refine = 0;
  for (const char* name : {"verify-bound", "check-structure", "geometry", "trace-iteration", "solve"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "scenario JSON file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--refine", refine, "use k refinement levels h, h/2, ... instead of the configured sweep");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : degen::kExitConfig;
  }
  degen::CommandOptions opt;
  opt.out = out;
  if (refine > 0) opt.refine = refine;
  opt.threads = degen::threads_from_env();
  return degen::run_command(app.get_subcommands().front()->get_name(), config, opt, std::cerr);
}
