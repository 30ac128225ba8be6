// Command-line front end for the config-driven pipeline.
#include <cstdint>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kgram/config.hpp"
#include "kgram/errors.hpp"
#include "kgram/parallel.hpp"
#include "kgram/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (YAML)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (overrides the config)");
  cmd->add_option("--seed", c.seed, "seed for stochastic steps (overrides the config)");
  cmd->add_option("--threads", c.threads, "worker threads (default: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgram: kernel energy functions and invariant densities from simulated data"};
  app.set_version_flag("--version", kgram::code_version());
  app.require_subcommand(1);

  Common common;
  auto* simulate = app.add_subcommand("simulate", "simulate the configured ensembles");
  auto* fit = app.add_subcommand("fit", "fit energy models (and evaluate them on the probe grid)");
  auto* eval = app.add_subcommand("eval", "evaluate fitted models on the probe grid");
  auto* density = app.add_subcommand("density", "estimate the invariant density and its support");
  auto* validate = app.add_subcommand("validate", "run the built-in acceptance suite");
  for (auto* cmd : {simulate, fit, eval, density}) add_common(cmd, common, true);
  add_common(validate, common, false);
  std::vector<int> only;
  validate->add_option("--only", only, "criterion ids to run (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (common.threads > 0) kgram::set_thread_count(common.threads);
    if (validate->parsed()) {
      const std::filesystem::path out = common.out.empty() ? std::filesystem::path("validation") : std::filesystem::path(common.out);
      const bool ok = kgram::run_validate(out, std::cout, only);
      std::cout << (ok ? "all criteria passed" : "some criteria FAILED") << "; verdicts in "
                << (out / "validation.json").string() << "\n";
      return ok ? 0 : 1;
    }
    const kgram::ExperimentConfig cfg = kgram::load_config(common.config, common.seed);
    const std::filesystem::path out = common.out.empty() ? cfg.output_dir : std::filesystem::path(common.out);
    std::vector<std::filesystem::path> written;
    if (simulate->parsed()) written = kgram::run_simulate(cfg, out);
    if (fit->parsed()) written = kgram::run_fit_eval(cfg, out);
    if (eval->parsed()) written = kgram::run_eval(cfg, out);
    if (density->parsed()) written = kgram::run_density(cfg, out);
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
  } catch (const kgram::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
