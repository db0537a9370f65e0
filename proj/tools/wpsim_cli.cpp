// Command-line front end: wpsim <verb> --config PATH [--out DIR] [--seed N] [--fields] [--quiet]

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "wpsim/run.hpp"

int main(int argc, char** argv) {
  using namespace wpsim;
  CLI::App app{"Coupled Westervelt-Pennes simulator and experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool fields = false, quiet = false;
  for (const auto& verb : experiment_names()) {
    auto* sub = app.add_subcommand(verb, "run the " + verb + " experiment");
    sub->add_option("--config", config_path, "configuration file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "seed for randomised initial data");
    sub->add_flag("--fields", fields, "dump full nodal fields");
    sub->add_flag("--quiet", quiet, "suppress the report on stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  RunOptions opt;
  opt.argv.assign(argv, argv + argc);
  opt.fields = fields;
  opt.quiet = quiet;
  if (sub->count("--out")) opt.out_dir = out_dir;
  if (sub->count("--seed")) opt.seed = seed;

  try {
    RunConfig cfg = parse_config_file(config_path, verb);
    return run(std::move(cfg), opt);
  } catch (const ConfigError& e) {
    const auto failure = failure_json(e);
    std::cerr << failure.dump() << '\n';
    if (opt.out_dir) {
      std::filesystem::create_directories(*opt.out_dir);
      std::ofstream(std::filesystem::path(*opt.out_dir) / "failure.json") << failure.dump(2) << '\n';
    }
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << failure_json(e).dump() << '\n';
    return kExitInternal;
  }
}
