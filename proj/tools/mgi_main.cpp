// Command-line front end: `mgi run` executes the full acquisition and
// reconstruction pipeline, `mgi report` re-prints a stored report.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "mgi/pipeline.hpp"

namespace {

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  std::string grid;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool no_noise = false;
};

int do_run(const RunOptions& opt) {
  mgi::ExperimentConfig config = mgi::parse_config_file(opt.config_path);
  if (opt.seed_set) config.seed = opt.seed;
  if (!opt.grid.empty()) {
    const auto sep = opt.grid.find('x');
    if (sep == std::string::npos)
      throw mgi::ConfigError("--grid must look like 64x64");
    config.params.grid = {std::stoi(opt.grid.substr(0, sep)),
                          std::stoi(opt.grid.substr(sep + 1))};
  }
  if (opt.no_noise) config.noise = false;
  if (!opt.out_dir.empty()) config.out_dir = opt.out_dir;

  const mgi::PipelineArtifacts artifacts = mgi::run_pipeline(config);
  std::cout << "wrote " << artifacts.out_dir.string() << " ("
            << artifacts.iterations << " reduction iterations)\n";
  mgi::print_report(artifacts.report, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplexed ghost imaging simulator"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "simulate, reconstruct, score");
  run->add_option("--config", run_opt.config_path, "key = value config file")
      ->required();
  run->add_option("--seed", run_opt.seed, "override the RNG seed")
      ->each([&](const std::string&) { run_opt.seed_set = true; });
  run->add_option("--grid", run_opt.grid, "override the grid, e.g. 32x32");
  run->add_flag("--no-noise", run_opt.no_noise,
                "emit exact correlator means instead of sampling");
  run->add_option("--out", run_opt.out_dir, "output directory");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "re-print a stored report");
  report->add_option("--in", report_dir, "pipeline output directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(run_opt);
    mgi::print_report_from_dir(report_dir, std::cout);
    return 0;
  } catch (const mgi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
