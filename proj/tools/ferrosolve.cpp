// ferrosolve: run, converge or check a ferroelectric scenario file.

#include "ferro/cli.hpp"
#include "ferro/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Rothe time-stepping for rate-dependent ferroelectric models"};
  app.require_subcommand(1);
  ferro::CliOptions opt;
  std::string levels;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", opt.scenario_path, "scenario file")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_flag("--override-coercivity", opt.override_coercivity,
                  "run even when the existence hypotheses are not met");
  };
  auto* run = app.add_subcommand("run", "integrate one level");
  add_common(run);
  run->add_option("--level", opt.level, "refinement level m (h = T/2^m)");
  auto* converge = app.add_subcommand("converge", "nested refinement study");
  add_common(converge);
  converge->add_option("--levels", levels, "m0..m1");
  auto* check = app.add_subcommand("check", "print material and potential diagnostics");
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ferro::kExitValidationFailure;
  }
  opt.command = app.get_subcommands().front()->get_name();
  if (!levels.empty()) {
    try {
      opt.levels = ferro::parse_level_range(levels);
    } catch (const ferro::Error& e) {
      std::cerr << e.what() << '\n';
      return ferro::kExitValidationFailure;
    }
  }
  return ferro::run_cli(opt, std::cout, std::cerr);
}
