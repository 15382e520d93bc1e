#include "vem/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

std::string load_config(const std::string& source) {
  if (std::filesystem::exists(source)) {
    std::ifstream in(source);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return vem::cli::catalog_entry(source).text;
}

void print_summary(const vem::cli::RunResult& result) {
  std::cout << std::left << std::setw(18) << "solver" << std::setw(16) << "max|grad|-dev"
            << std::setw(14) << "hausdorff" << "checks\n";
  for (const auto& r : result.runs) {
    std::cout << std::setw(18) << r.solver;
    if (!r.error.empty()) {
      std::cout << "error: " << r.error << '\n';
      continue;
    }
    double worst = 0.0;
    for (double d : r.report.tube_grad_defect) worst = std::max(worst, d);
    std::cout << std::setw(16) << std::setprecision(4) << worst << std::setw(14)
              << r.report.hausdorff.back();
    for (std::size_t i = 0; i < r.checks.size(); ++i)
      std::cout << (i ? " " : "") << r.checks[i].name << (r.checks[i].pass ? "=pass" : "=FAIL");
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set transport with velocity extension"};
  app.require_subcommand(0, 1);
  bool list = false;
  app.add_flag("--list-scenarios", list, "List the built-in scenarios");

  auto* run = app.add_subcommand("run", "Run a scenario config (file path or catalog name)");
  std::string source;
  std::vector<std::string> overrides;
  std::string out = "out";
  bool check = false;
  run->add_option("config", source, "Config file or built-in scenario name")->required();
  run->add_option("--override", overrides, "section.key=value (repeatable)");
  run->add_option("--out", out, "Output directory");
  run->add_flag("--check", check, "Exit with 2 when a run check fails");

  auto* show = app.add_subcommand("show", "Print the config text of a built-in scenario");
  std::string show_name;
  show->add_option("name", show_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list) {
      for (const auto& e : vem::cli::scenario_catalog())
        std::cout << std::left << std::setw(16) << e.name << e.description << '\n';
      return 0;
    }
    if (*show) {
      std::cout << vem::cli::catalog_entry(show_name).text;
      return 0;
    }
    if (!*run) {
      std::cout << app.help();
      return 0;
    }
    const auto config = vem::cli::parse_config(load_config(source), overrides);
    const auto scenario = vem::cli::build_scenario(config);
    const auto result = vem::cli::run_scenario(scenario, out, &std::cout);
    print_summary(result);
    if (result.failed()) return 1;
    if (check && !result.checks_pass()) return 2;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
