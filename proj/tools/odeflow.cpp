#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "odeflow/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Latent-space edits as trained ODE flows on synthetic worlds"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  app.add_option("--config", config_path, "experiment config file (defaults used when omitted)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "run seed, overrides [run] seed");
  CLI::Option* out_opt = app.add_option("--out", out, "run directory, overrides [run] out");
  app.add_flag("--quiet", quiet, "suppress progress output");

  const char* stages[][2] = {
      {"worldgen", "write the world descriptor and a labelled sample"},
      {"train", "train one edit flow per attribute"},
      {"baseline", "fit SVM directions and store them as constant fields"},
      {"eval", "write a control/disentanglement curve per checkpoint"},
      {"analyze", "spectral summary of the trained fields"},
      {"report", "SVG of all curves plus summary.txt"},
  };
  for (const auto& s : stages) app.add_subcommand(s[0], s[1]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  odeflow::RunOptions options;
  options.config_path = config_path;
  if (seed_opt->count()) options.seed = seed;
  if (out_opt->count()) options.out = out;
  options.quiet = quiet;
  return odeflow::run_command(app.get_subcommands().front()->get_name(), options, std::cout, std::cerr);
}
