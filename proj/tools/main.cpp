#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"freecircle: free multiplicative convolution on the unit circle"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment config");
  std::string config;
  std::string output;
  std::string format;
  run->add_option("config", config, "experiment config (JSON)")->required();
  run->add_option("--output", output, "write results here instead of the config's output path or stdout");
  run->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  CLI11_PARSE(app, argc, argv);

  freecircle::cli::RunOptions opts;
  if (!output.empty()) opts.output = output;
  if (!format.empty()) opts.format = format;
  try {
    opts.budget = freecircle::cli::budget_from_env();
  } catch (const std::exception& e) {
    std::cerr << "freecircle: " << e.what() << "\n";
    return 1;
  }
  return freecircle::cli::run(config, opts, std::cout, std::cerr);
}
