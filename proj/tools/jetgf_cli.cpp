#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "jetgf/errors.hpp"
#include "jetgf/runner.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON configuration file")->required();
  cmd->add_option("--out", args.out, "output directory")->required();
  cmd->add_option("--seed", args.seed, "seed for all randomized checks");
  cmd->add_option("--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contact Hamiltonian flows on the 1-jet space and their generating functions"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* flow_cmd = app.add_subcommand("flow", "integrate one Hamiltonian trajectory");
  CLI::App* front_cmd =
      app.add_subcommand("front", "sample the time-1 Legendrian, wave front and spectrum");
  CLI::App* genfun_cmd =
      app.add_subcommand("genfun-check", "verify the generating-function construction");
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "run the action and conformal identity checks");
  for (CLI::App* cmd : {flow_cmd, front_cmd, genfun_cmd, validate_cmd}) add_common(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const jetgf::runner::RunConfig cfg = jetgf::runner::load_config(args.config);
    if (flow_cmd->parsed())
      return jetgf::runner::cmd_flow(cfg, args.out, args.seed, args.jobs);
    if (front_cmd->parsed())
      return jetgf::runner::cmd_front(cfg, args.out, args.seed, args.jobs);
    if (genfun_cmd->parsed())
      return jetgf::runner::cmd_genfun_check(cfg, args.out, args.seed, args.jobs);
    return jetgf::runner::cmd_validate(cfg, args.out, args.seed, args.jobs);
  } catch (const jetgf::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const jetgf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
