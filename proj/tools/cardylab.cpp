#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cardylab/harness.hpp"

namespace {

void add_common(CLI::App* cmd, cardylab::ExperimentConfig& cfg) {
  cmd->add_option("--domain", cfg.domain_path, "domain JSON file")->required();
  cmd->add_option("--scales", cfg.scales,
                  "tile diameters, strictly decreasing")
      ->required()
      ->delimiter(',');
  cmd->add_option("--samples", cfg.samples, "Monte Carlo samples per scale");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--format", cfg.format, "csv|json|plotdata")
      ->check(CLI::IsMember({"csv", "json", "plotdata"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossing-probability experiments on discretized planar domains"};
  app.require_subcommand(1);

  cardylab::ExperimentConfig cfg;
  auto* audit = app.add_subcommand("audit", "approximation condition audit");
  auto* sweep = app.add_subcommand("sweep", "crossing estimate vs oracle sweep");
  auto* decay = app.add_subcommand("decay", "boundary-value decay profile");
  auto* rings = app.add_subcommand("rings", "annulus circuit probabilities");
  auto* explore = app.add_subcommand("explore", "interface exploration traces");
  auto* equicont =
      app.add_subcommand("equicont", "slit-perturbation stability table");
  for (auto* cmd : {audit, sweep, decay, rings, explore, equicont})
    add_common(cmd, cfg);
  sweep->add_option("--oracle-tol", cfg.oracle_tol, "map residual bound");
  equicont->add_option("--oracle-tol", cfg.oracle_tol, "map residual bound");
  rings->add_option("--levels", cfg.levels, "dyadic annulus levels");
  explore->add_option("--runs", cfg.runs, "number of traces");
  equicont->add_option("--perturbations", cfg.perturbations,
                       "perturbed slits per delta");

  CLI11_PARSE(app, argc, argv);
  cfg.kind = app.get_subcommands().front()->get_name();

  try {
    std::filesystem::create_directories(cfg.out_dir);
    const cardylab::Report rep = cardylab::run(cfg);
    rep.write(cfg.out_dir, cfg.kind, cfg.format);
    std::cout << rep.csv();
    return 0;
  } catch (const cardylab::Error& e) {
    std::cerr << "{\"error\":\"" << e.code() << "\",\"detail\":\"" << e.what()
              << "\"}\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"INTERNAL\",\"detail\":\"" << e.what() << "\"}\n";
    return 1;
  }
}
