#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "kgram/config.hpp"

namespace kgram {

// Config-driven pipeline stages. Each stage writes into `out` (created if
// needed) and returns the files it wrote. Every file carries the config hash and
// code version. Stages read their inputs from `out`, so they run in order:
// simulate -> fit -> eval / density.

// ensemble_<impulse|release|stationary>.csv
std::vector<std::filesystem::path> run_simulate(const ExperimentConfig& cfg,
                                                const std::filesystem::path& out);

// model_c.{kgmodel,json} (controllability, from cfg.fit_source) and, when a
// release ensemble exists, model_o.{kgmodel,json}.
std::vector<std::filesystem::path> run_fit(const ExperimentConfig& cfg,
                                           const std::filesystem::path& out);

// energies.csv: probe coordinates, Lc and/or Lo.
std::vector<std::filesystem::path> run_eval(const ExperimentConfig& cfg,
                                            const std::filesystem::path& out);

std::vector<std::filesystem::path> run_fit_eval(const ExperimentConfig& cfg,
                                                const std::filesystem::path& out);

// density.csv, support.csv and report.json (Z, tau, captured mass, component
// count, and the L1 distance to the analytic density when the system has one).
std::vector<std::filesystem::path> run_density(const ExperimentConfig& cfg,
                                               const std::filesystem::path& out);

// Runs the built-in acceptance suite, printing one line per criterion to
// `log` and writing validation.json into `out`. Returns true when all pass.
bool run_validate(const std::filesystem::path& out, std::ostream& log,
                  const std::vector<int>& only = {});

}  // namespace kgram
