#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fractrans/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = fractrans::cli;
  CLI::App app{"Solver and principle checker for multi-term fractional transport problems", "fractrans"};
  std::string command;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t nx = 0;
  std::size_t nt = 0;
  app.add_option("command", command, "solve | verify | compare | cauchy | convergence | mlf | fuzz")->required();
  app.add_option("--config", config, "run configuration (TOML)")->required();
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed for randomized checks");
  auto* nx_opt = app.add_option("--nx", nx, "space steps")->check(CLI::PositiveNumber);
  auto* nt_opt = app.add_option("--nt", nt, "time steps")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  cli::configure_logging();
  cli::Overrides o;
  o.command = cli::parse_command(command);
  if (!o.command) {
    std::cerr << "error: unknown command '" << command << "'\n";
    return cli::kExitInput;
  }
  if (*out_opt) o.out = out;
  if (*seed_opt) o.seed = seed;
  if (*nx_opt) o.nx = nx;
  if (*nt_opt) o.nt = nt;
  try {
    auto cfg = cli::load_config(config);
    cli::apply_overrides(cfg, o);
    return cli::run(cfg, std::cout, std::cerr);
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInput;
  }
}
