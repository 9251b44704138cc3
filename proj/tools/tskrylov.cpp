// tskrylov: run or validate an experiment config.
//
//   tskrylov run --config configs/heq_solve.json [--set solver.atol=1e-10]...
//   tskrylov validate --config configs/heq_solve.json
//
// Exit status: 0 success, 1 solver failure, 2 config error.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "tsk/experiment.hpp"

namespace {

int print_diagnostics(const std::vector<tsk::Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << "config error: " << tsk::to_string(d) << '\n';
  return diags.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-stepper Krylov experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--set", overrides, "Override a config value, e.g. --set continuation.ds=0.02");

  auto* check = app.add_subcommand("validate", "Check a config file and list problems");
  check->add_option("--config", config_path, "JSON experiment config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto doc = tsk::load_config_document(config_path, overrides);
    std::vector<tsk::Diagnostic> diags;
    const auto cfg = tsk::parse_config(doc, diags);
    if (diags.empty()) tsk::check_config(cfg, diags);
    if (check->parsed()) {
      if (diags.empty()) std::cout << config_path << ": ok\n";
      return print_diagnostics(diags);
    }
    if (!diags.empty()) return print_diagnostics(diags);

    const auto report = tsk::run(cfg);
    std::cout << report.summary["results"].dump(2) << '\n';
    std::cout << "wrote " << report.files.size() + 1 << " files to " << cfg.output_dir << '\n';
    if (!report.ok) {
      std::cerr << "solver failure";
      if (report.summary["results"].contains("error"))
        std::cerr << ": " << report.summary["results"]["error"].get<std::string>();
      std::cerr << '\n';
      return 1;
    }
    return 0;
  } catch (const tsk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
