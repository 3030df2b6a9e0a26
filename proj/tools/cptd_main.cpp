#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cptd/error.hpp"
#include "cptd/runner.hpp"
#include "cptd/text.hpp"

namespace {

struct CliFlags {
  std::string config_path;
  std::string alpha;
  std::vector<std::string> methods;
  std::string seed;
  std::string eval_window;
  std::string output;
  std::string threads;
};

void add_common_flags(CLI::App* cmd, CliFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key = value config file");
  cmd->add_option("--alpha", flags.alpha, "miss rate target in (0,1)");
  cmd->add_option("--method", flags.methods,
                  "method to run (repeatable): split, cptd_mad, cptd_rat, lasplit");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--eval-window", flags.eval_window, "'full' or the number of final steps");
  cmd->add_option("--output", flags.output, "output directory");
  cmd->add_option("--threads", flags.threads, "worker cap (0 = OpenMP default)");
}

cptd::RunConfig build_config(cptd::Subcommand sub, const CliFlags& flags) {
  std::map<std::string, std::string> kv;
  if (!flags.config_path.empty()) kv = cptd::text::parse_kv_file(flags.config_path);

  // Flags override file keys.
  if (!flags.alpha.empty()) kv["alpha"] = flags.alpha;
  if (!flags.methods.empty()) {
    std::string joined;
    for (const std::string& m : flags.methods) {
      if (!joined.empty()) joined += ",";
      joined += m;
    }
    kv["methods"] = joined;
  }
  if (!flags.seed.empty()) kv["seed"] = flags.seed;
  if (!flags.eval_window.empty()) kv["eval_window"] = flags.eval_window;
  if (!flags.output.empty()) kv["output"] = flags.output;
  if (!flags.threads.empty()) kv["threads"] = flags.threads;

  cptd::RunConfig config = cptd::config_from_kv(kv);
  config.subcommand = sub;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-free prediction intervals for cross-sectional time-series panels"};
  app.require_subcommand(1);

  CliFlags calibrate_flags, evaluate_flags, simulate_flags;
  CLI::App* calibrate = app.add_subcommand("calibrate", "emit interval files for each method");
  add_common_flags(calibrate, calibrate_flags);
  CLI::App* evaluate = app.add_subcommand("evaluate", "calibrate and score coverage/width metrics");
  add_common_flags(evaluate, evaluate_flags);
  CLI::App* simulate = app.add_subcommand("simulate", "run the Monte-Carlo experiment harness");
  add_common_flags(simulate, simulate_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    cptd::RunConfig config;
    if (calibrate->parsed()) {
      config = build_config(cptd::Subcommand::calibrate, calibrate_flags);
    } else if (evaluate->parsed()) {
      config = build_config(cptd::Subcommand::evaluate, evaluate_flags);
    } else {
      config = build_config(cptd::Subcommand::simulate, simulate_flags);
    }
    cptd::run(config);
    return 0;
  } catch (const cptd::Error& e) {
    cptd::ErrorClass cls = cptd::error_class(e.code());
    std::cerr << cptd::to_string(cls) << ": " << e.what() << "\n";
    switch (cls) {
      case cptd::ErrorClass::Config: return 2;
      case cptd::ErrorClass::Io: return 3;
      case cptd::ErrorClass::Data: return 4;
      case cptd::ErrorClass::Math: return 5;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << "\n";
    return 1;
  }
}
