#include "kpo/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"Coupled Kerr parametric oscillator networks"};
  app.require_subcommand(1);
  app.allow_extras();

  kpo::RunOptions opt;
  std::uint64_t seed = 0;
  const std::map<std::string, std::string> help{
      {"states", "all mean-field steady states with stability and symmetry"},
      {"sweep", "bifurcation tree along the configured sweep axis"},
      {"phase-diagram", "stable-state classification on a detuning x drive grid"},
      {"psd", "linearized fluctuation spectra around one state"},
      {"probe", "Langevin pump-noisy-probe sweep"},
      {"lindblad", "quantum steady state and quadrature distribution"},
      {"labframe", "lab-frame integration and demodulation"},
      {"normal-modes", "eigenmodes, mode drives and lobe thresholds"}};
  for (const auto& name : kpo::subcommands()) {
    auto* sub = app.add_subcommand(name, help.count(name) ? help.at(name) : "");
    sub->allow_extras();
    sub->add_option("--config", opt.config_path, "JSON configuration file")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", seed, "RNG seed, overrides the config");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opt.quiet, "suppress warnings on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kpo::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  opt.subcommand = sub->get_name();
  if (sub->count("--seed") > 0) opt.seed = seed;
  // Anything CLI11 did not recognize must be a --dotted.path=value override.
  for (const auto& extra : sub->remaining()) {
    if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos) {
      std::cerr << "unrecognized argument: " << extra << "\n";
      return kpo::kExitConfig;
    }
    opt.overrides.push_back(extra);
  }
  return kpo::run(opt);
}
