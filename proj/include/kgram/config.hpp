#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgram/density.hpp"
#include "kgram/estimators.hpp"
#include "kgram/kernels.hpp"
#include "kgram/simulate.hpp"
#include "kgram/systems.hpp"

namespace kgram {

// Version string written into every artifact.
const char* code_version();

struct SystemConfig {
  // Builtin name, or "polynomial" together with `polynomial`.
  std::string builtin;
  std::map<std::string, double> params;
  std::optional<PolynomialSystemSpec> polynomial;

  ControlSystem build() const;
  // Analytic stationary density when one is known.
  std::function<double(const Eigen::VectorXd&)> stationary_density() const;
};

struct StationaryConfig {
  long n_paths = 0;
  double burn_in = 0.0;
  std::optional<std::uint64_t> seed;
  long samples_per_path = 1;
  long stride = 1;
};

struct EnsembleConfig {
  bool impulse = false;
  bool release = false;
  std::optional<StationaryConfig> stationary;
};

struct KernelConfig {
  KernelFamily family = KernelFamily::kLaplacian;
  int degree = 2;
  // nullopt: median pairwise distance of the fitted samples.
  std::optional<double> bandwidth;

  KernelSpec resolve(const PointSet& samples) const;
};

struct LambdaPolicy {
  bool schedule = false;
  double value = 0.0;

  double resolve(long m) const { return schedule ? lambda_schedule(m) : value; }
};

struct BoxConfig {
  std::vector<double> lo;
  std::vector<double> hi;
  long resolution = 2;
  std::uint64_t seed = 0;

  EvaluationDomain domain() const;
};

/// One experiment: system, simulation grid, which ensembles to draw, how to fit
/// and where to evaluate.
struct ExperimentConfig {
  std::string name = "experiment";
  SystemConfig system;
  SimulationGrid grid;
  EnsembleConfig ensembles;
  KernelConfig kernel;
  LambdaPolicy lambda;
  GramianScaling scaling = GramianScaling::kOneOverM;
  bool center = false;
  // Ensemble the controllability model is fitted on: "stationary" or "impulse".
  std::string fit_source = "stationary";
  std::optional<BoxConfig> domain;
  // Probe grid for `eval`, or an explicit list of probe points; defaults to the
  // domain.
  std::optional<BoxConfig> probes;
  std::optional<Eigen::MatrixXd> probe_points;
  double support_mass = 0.9;
  std::filesystem::path output_dir = "out";

  // Canonical YAML of the parsed tree (after overrides); hashed for provenance.
  std::string canonical;
  std::string hash() const;
};

// Throws ConfigError (with a 1-based line number where one is known).
ExperimentConfig parse_config(const std::string& text,
                              std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace kgram
