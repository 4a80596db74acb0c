#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "swg/config.hpp"
#include "swg/errors.hpp"
#include "swg/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spline-based hidden Markov stochastic weather generator for daily "
               "precipitation: fitting, assessment, cross-validation, and trend analysis"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  long long seed_override = -1;
  int workers_override = 0;
  bool resume = false;

  auto add_common = [&](CLI::App* sub, bool with_resume) {
    sub->add_option("--config", config_path, "run configuration (TOML)")->required();
    sub->add_option("--seed", seed_override, "override mcmc.seed");
    sub->add_option("--workers", workers_override, "override output.workers");
    sub->add_option("--output", output_override, "override output.dir");
    if (with_resume) sub->add_flag("--resume", resume, "continue from checkpoints");
  };

  add_common(app.add_subcommand("fit", "run the MCMC chains and persist posterior samples"), true);
  add_common(app.add_subcommand("assess", "posterior-predictive assessment tables"), false);
  add_common(app.add_subcommand("crossval", "held-out-year model comparison"), true);
  add_common(app.add_subcommand("trend", "imputation and posterior trend tables"), false);
  add_common(app.add_subcommand("simulate", "emit posterior-predictive series"), false);
  add_common(app.add_subcommand("impute", "emit imputed values for missing days"), false);

  CLI11_PARSE(app, argc, argv);

  swg::RunConfig cfg;
  try {
    cfg = swg::load_run_config(config_path);
    if (seed_override >= 0) cfg.chain.seed = static_cast<std::uint64_t>(seed_override);
    if (workers_override > 0) cfg.workers = workers_override;
    if (!output_override.empty()) cfg.output_dir = output_override;
    cfg.validate();
  } catch (const swg::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return swg::kExitConfig;
  } catch (const swg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return swg::kExitConfig;
  }

  return swg::run_command(app.get_subcommands().front()->get_name(), cfg, resume);
}
