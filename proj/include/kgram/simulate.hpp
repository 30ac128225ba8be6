#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "kgram/kernels.hpp"
#include "kgram/system.hpp"

namespace kgram {

enum class EnsembleKind { kControllability, kObservability, kStationary };

std::string_view to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(std::string_view name);

struct Provenance {
  SimulationGrid grid;
  std::string system_name;
  std::string system_fingerprint;
  std::optional<std::uint64_t> seed;
  // Stationary draws only.
  double burn_in = 0.0;
  long stride = 1;
};

/// Sampled states (one per row) together with how they were generated.
///
/// `channels` is q for controllability ensembles and p for observability
/// ensembles, so that rows() == grid.steps * channels; it is 0 for stationary
/// ensembles.
struct SampleEnsemble {
  EnsembleKind kind = EnsembleKind::kStationary;
  PointSet points;
  int channels = 0;
  Provenance provenance;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  // Hash over provenance and point values.
  std::string content_hash() const;
};

// States at t_0 = 0, t_1, ..., t_N (one per row).
struct Trajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;
};

using InputSignal = std::function<Eigen::VectorXd(double)>;

// Fixed-step classical RK4 on the grid. Throws DivergenceError naming the time
// at which the state first became non-finite.
Trajectory integrate_ode(const ControlSystem& sys, const Eigen::VectorXd& x0,
                         const SimulationGrid& grid, const InputSignal& input = {});

// Impulse u = delta(t) e_j realized as the jump x(0+) = G(0) e_j followed by
// unforced integration. Row mu = i * q + j holds x^j(t_{i+1}).
SampleEnsemble impulse_responses(const ControlSystem& sys, const SimulationGrid& grid);

// Unforced release from each x0 = e_k. Row mu = i * p + j holds
// d_j(t_{i+1}) = (y_j^1, ..., y_j^n)(t_{i+1}).
SampleEnsemble release_responses(const ControlSystem& sys, const SimulationGrid& grid);

struct StationaryPlan {
  long n_paths = 1;
  double burn_in = 0.0;
  std::uint64_t seed = 0;
  long samples_per_path = 1;
  // Steps between retained samples when samples_per_path > 1.
  long stride = 1;
};

// Euler-Maruyama with step T/N, every path started at the origin. Each path
// draws from its own generator seeded by (seed, path index), so the output does
// not depend on the thread schedule. Rows are path-major.
SampleEnsemble sde_trajectories(const ControlSystem& sys, const SimulationGrid& grid,
                                const StationaryPlan& plan);

inline SampleEnsemble sde_trajectories(const ControlSystem& sys, const SimulationGrid& grid,
                                       long n_paths, double burn_in, std::uint64_t seed) {
  return sde_trajectories(sys, grid, StationaryPlan{n_paths, burn_in, seed, 1, 1});
}

}  // namespace kgram
