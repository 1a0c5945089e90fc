#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bridge/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial Bayesian optimization over demonstration subsets"};
  app.require_subcommand(1);

  std::string config;
  bool resume = false;
  auto* optimize = app.add_subcommand("optimize", "Run the optimize/generate loop");
  optimize->add_option("--config", config, "Run configuration (JSON)")->required();
  optimize->add_flag("--resume", resume, "Continue an interrupted run in the output directory");

  auto* analyze = app.add_subcommand("analyze", "Importance ranking and ranked-subset sweep");
  analyze->add_option("--config", config, "Run configuration (JSON)")->required();

  std::string dir;
  auto* report = app.add_subcommand("report", "Aggregate milestone ledgers across seeds");
  report->add_option("--dir", dir, "Directory holding one or more runs")->required();

  std::string slot;
  auto* baseline = app.add_subcommand("baseline", "Run the loop with a baseline optimize slot");
  baseline->add_option("--config", config, "Run configuration (JSON)")->required();
  baseline->add_option("--slot", slot, "Selection procedure")
      ->required()
      ->check(CLI::IsMember({"rs", "retrieval", "diversity"}));
  baseline->add_flag("--resume", resume, "Continue an interrupted run in the output directory");

  CLI11_PARSE(app, argc, argv);

  if (*optimize) {
    return bridge::cmd_optimize(config, bridge::OptimizeOptions{resume, std::nullopt},
                                std::cout, std::cerr);
  }
  if (*analyze) return bridge::cmd_analyze(config, std::cout, std::cerr);
  if (*report) return bridge::cmd_report(dir, std::cout, std::cerr);
  return bridge::cmd_baseline(config, bridge::slot_from_string(slot), resume, std::cout,
                              std::cerr);
}
