// Command-line entry point: `repair run <descriptor> [options]`.

#include <iostream>

#include <CLI11.hpp>

#include "sibfix/orchestrator.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-location automated program repair driven by an LLM"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Repair the project described by a descriptor file");
  std::string descriptor;
  std::string mode;
  std::string budget;
  std::string out;
  double theta = 0;
  double alpha = 0;
  int attempts = 0;
  std::size_t ingredients = 0;
  sibfix::RunOverrides overrides;

  run->add_option("descriptor", descriptor, "Project descriptor (JSON)")->required();
  auto* mode_opt = run->add_option("--mode", mode, "Fault localization mode")
                       ->check(CLI::IsMember({"sbfl", "spfl", "pfl"}));
  auto* theta_opt = run->add_option("--theta", theta, "Embedding similarity threshold");
  auto* alpha_opt = run->add_option("--alpha", alpha, "Jaccard similarity threshold");
  auto* attempts_opt =
      run->add_option("--attempts", attempts, "Repair attempts per phase")->check(CLI::PositiveNumber);
  auto* ingredients_opt =
      run->add_option("--ingredients", ingredients, "Fix ingredients per sibling line")
          ->check(CLI::PositiveNumber);
  auto* budget_opt = run->add_option("--budget", budget, "Time budget, e.g. 90s, 30m, 5h");
  auto* out_opt = run->add_option("--out", out, "Directory that receives run directories");
  run->add_flag("--stop-on-first-plausible", overrides.stop_on_first_plausible,
                "Stop as soon as one plausible patch is found");
  run->add_flag("--keep-workspaces", overrides.keep_workspaces,
                "Keep patched workspaces in the run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sibfix::kExitInvalidInput;
  }

  try {
    if (*mode_opt) overrides.mode = sibfix::parse_mode(mode);
    if (*theta_opt) overrides.theta = theta;
    if (*alpha_opt) overrides.alpha = alpha;
    if (*attempts_opt) overrides.attempts = attempts;
    if (*ingredients_opt) overrides.ingredients = ingredients;
    if (*budget_opt) overrides.budget = sibfix::parse_duration(budget);
    if (*out_opt) overrides.out = out;
  } catch (const sibfix::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sibfix::kExitInvalidInput;
  }

  try {
    const auto result = sibfix::run(descriptor, overrides, std::cerr);
    if (!result.run_dir.empty()) std::cout << (result.run_dir / "report.json").string() << "\n";
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 4;
  }
}
