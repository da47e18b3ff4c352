// Command-line front end: `leafavg run <scenario.json> --out <dir>` and `leafavg catalog`.

#include <CLI11.hpp>
#include <iostream>

#include "leafavg/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Time and length averages along orbits and leaves"};
  app.require_subcommand(1);

  leafavg::RunOptions options;
  std::string scenario;
  std::string out_dir = ".";
  auto* run = app.add_subcommand("run", "execute a JSON scenario");
  run->add_option("scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--svg", options.svg, "write an SVG plot per run");
  run->add_option("--threads", options.threads, "worker threads")->check(CLI::Range(1u, 256u));
  run->add_flag("--timing", options.timing, "record wall-clock seconds in the report");

  auto* catalog = app.add_subcommand("catalog", "list fields, maps, observables and scenario stanzas");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : leafavg::kExitScenarioError;
  }

  if (catalog->parsed()) {
    std::cout << leafavg::list_catalog();
    return leafavg::kExitOk;
  }
  options.out_dir = out_dir;
  return leafavg::run_scenario(scenario, options, std::cerr);
}
