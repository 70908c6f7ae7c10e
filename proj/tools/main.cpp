#include <iostream>

#include <CLI11.hpp>

#include "seqopt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fabrication sequence optimization for multi-axis additive manufacturing"};
  app.require_subcommand(1);

  seqopt::CliOptions opts;
  std::string config, out, field;
  int threads = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out, "output directory, overrides the config");
    sub->add_option("-t,--threads", threads, "worker threads, overrides the config and SEQOPT_THREADS")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--deterministic", opts.deterministic, "run single-threaded");
  };

  auto* optimize = app.add_subcommand("optimize", "optimize the time field and write the run directory");
  common(optimize);
  auto* simulate = app.add_subcommand("simulate", "forward simulation of a time field (planar by default)");
  common(simulate);
  simulate->add_option("-f,--field", field, "time field file")->check(CLI::ExistingFile);
  auto* gradcheck = app.add_subcommand("gradcheck", "adjoint gradient against finite differences");
  common(gradcheck);
  auto* exporter = app.add_subcommand("export", "export a time field, its layers and stage displacements");
  common(exporter);
  exporter->add_option("-f,--field", field, "time field file")->check(CLI::ExistingFile);
  exporter->add_option("--format", opts.format, "voxel, vtk or both")
      ->check(CLI::IsMember({"voxel", "vtk", "both"}));

  CLI11_PARSE(app, argc, argv);

  opts.config = config;
  if (!out.empty()) opts.out = out;
  if (threads > 0) opts.threads = threads;
  if (!field.empty()) opts.field = field;

  if (*optimize) return seqopt::cmd_optimize(opts, std::cout, std::cerr);
  if (*simulate) return seqopt::cmd_simulate(opts, std::cout, std::cerr);
  if (*gradcheck) return seqopt::cmd_gradcheck(opts, std::cout, std::cerr);
  return seqopt::cmd_export(opts, std::cout, std::cerr);
}
