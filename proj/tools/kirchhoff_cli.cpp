#include <iostream>

#include "CLI11.hpp"
#include "kirchhoff/cli.hpp"

int main(int argc, char** argv) {
  namespace kc = kirchhoff::cli;
  CLI::App app{"Nonlocal fourth-order plate solver"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int n = 0;
  bool override_theory = false;
  bool no_timestamp = false;

  for (const char* name : {"solve", "sweep", "verify", "audit"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "TOML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (default: [run] out)");
    sub->add_option("--n", n, "Interior nodes per axis")->check(CLI::Range(2, 1 << 20));
    sub->add_flag("--override-theory", override_theory, "Solve even when the hypothesis audit fails");
    sub->add_flag("--no-timestamp", no_timestamp, "Omit generated_at from report.json");
  }
  CLI11_PARSE(app, argc, argv);

  const auto command = kc::parse_command(app.get_subcommands().front()->get_name());
  kc::RunOptions opts;
  if (!out.empty()) opts.out_dir = out;
  if (n > 0) opts.n = n;
  opts.override_theory = override_theory;
  opts.timestamp = !no_timestamp;
  try {
    return kc::run(*command, kirchhoff::load_config(config), opts, std::cout);
  } catch (const kirchhoff::ConfigError& e) {
    std::cerr << config << ": " << e.what() << "\n";
    return kc::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kc::kSolverFailure;
  }
}
