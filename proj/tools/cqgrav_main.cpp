// cqgrav: hybrid classical-quantum gravity toolkit CLI.
//
//   cqgrav verify|simulate|squeeze|decohere|energy <scenario.json>
//          [--out DIR] [--threads N] [--seed S]

#include <CLI11.hpp>
#include <iostream>

#include "cqgrav/parallel.hpp"
#include "cqgrav/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"classical-quantum gravity toolkit"};
  app.require_subcommand(1);

  std::string scenario;
  cqgrav::RunOptions opt;
  opt.threads = cqgrav::hardware_threads();
  std::int64_t seed = -1;

  std::vector<CLI::App*> subs;
  for (const char* name : {"verify", "simulate", "squeeze", "decohere", "energy"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("scenario", scenario, "scenario file (JSON)")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--threads", opt.threads, "worker thread cap");
    sub->add_option("--seed", seed, "override the scenario seed");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);
  if (seed >= 0) opt.seed_override = static_cast<std::uint64_t>(seed);
  if (opt.threads < 1) opt.threads = 1;

  std::string command = app.get_subcommands().front()->get_name();
  return cqgrav::run_scenario_file(command, scenario, opt, std::cout, std::cerr);
}
