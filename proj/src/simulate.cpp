#include "kgram/simulate.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "kgram/errors.hpp"
#include "kgram/hash.hpp"
#include "kgram/parallel.hpp"

namespace kgram {

namespace {

std::string time_string(double t) {
  std::ostringstream os;
  os.precision(10);
  os << t;
  return os.str();
}

Eigen::VectorXd rk4_step(const ControlSystem& sys, const Eigen::VectorXd& x, double t, double h,
                         const InputSignal& input) {
  auto rhs = [&](const Eigen::VectorXd& s, double tt) -> Eigen::VectorXd {
    Eigen::VectorXd d = sys.drift(s);
    if (input) d += sys.input_map(s) * input(tt);
    return d;
  };
  const Eigen::VectorXd k1 = rhs(x, t);
  const Eigen::VectorXd k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h);
  const Eigen::VectorXd k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h);
  const Eigen::VectorXd k4 = rhs(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Provenance deterministic_provenance(const ControlSystem& sys, const SimulationGrid& grid) {
  Provenance p;
  p.grid = grid;
  p.system_name = sys.name();
  p.system_fingerprint = sys.fingerprint();
  return p;
}

}  // namespace

std::string_view to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::kControllability: return "controllability";
    case EnsembleKind::kObservability: return "observability";
    case EnsembleKind::kStationary: return "stationary";
  }
  return "unknown";
}

EnsembleKind ensemble_kind_from_string(std::string_view name) {
  for (auto k : {EnsembleKind::kControllability, EnsembleKind::kObservability,
                 EnsembleKind::kStationary}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unknown ensemble kind '" + std::string(name) + "'");
}

std::string SampleEnsemble::content_hash() const {
  Fnv1a h;
  h.add(to_string(kind)).add(channels);
  h.add(provenance.grid.horizon).add(provenance.grid.steps);
  h.add(std::string_view(provenance.system_name)).add(std::string_view(provenance.system_fingerprint));
  h.add(provenance.seed.has_value()).add(provenance.seed.value_or(0));
  h.add(provenance.burn_in).add(provenance.stride);
  h.add_matrix(points);
  return h.hex();
}

Trajectory integrate_ode(const ControlSystem& sys, const Eigen::VectorXd& x0,
                         const SimulationGrid& grid, const InputSignal& input) {
  grid.validate();
  if (x0.size() != sys.state_dim()) {
    throw InputError("integrate_ode: initial state has dimension " + std::to_string(x0.size()) +
                     ", system has " + std::to_string(sys.state_dim()));
  }
  require_finite(x0, "initial state");
  const double h = grid.dt();
  Trajectory traj;
  traj.times.resize(grid.steps + 1);
  traj.states.resize(grid.steps + 1, sys.state_dim());
  traj.times(0) = 0.0;
  traj.states.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (long i = 0; i < grid.steps; ++i) {
    const double t = grid.time(i);
    x = rk4_step(sys, x, t, h, input);
    if (!x.allFinite()) {
      throw DivergenceError("integrate_ode: state diverged at t = " + time_string(grid.time(i + 1)),
                            grid.time(i + 1));
    }
    traj.times(i + 1) = grid.time(i + 1);
    traj.states.row(i + 1) = x.transpose();
  }
  return traj;
}

SampleEnsemble impulse_responses(const ControlSystem& sys, const SimulationGrid& grid) {
  grid.validate();
  const int n = sys.state_dim();
  const int q = sys.input_dim();
  SampleEnsemble ens;
  ens.kind = EnsembleKind::kControllability;
  ens.channels = q;
  ens.provenance = deterministic_provenance(sys, grid);
  ens.points.resize(grid.steps * q, n);
  const Eigen::MatrixXd g0 = sys.input_map(Eigen::VectorXd::Zero(n));
  for (int j = 0; j < q; ++j) {
    const Trajectory traj = integrate_ode(sys, g0.col(j), grid);
    for (long i = 0; i < grid.steps; ++i) {
      ens.points.row(i * q + j) = traj.states.row(i + 1);
    }
  }
  return ens;
}

SampleEnsemble release_responses(const ControlSystem& sys, const SimulationGrid& grid) {
  grid.validate();
  const int n = sys.state_dim();
  const int p = sys.output_dim();
  SampleEnsemble ens;
  ens.kind = EnsembleKind::kObservability;
  ens.channels = p;
  ens.provenance = deterministic_provenance(sys, grid);
  ens.points.resize(grid.steps * p, n);
  for (int k = 0; k < n; ++k) {
    const Trajectory traj = integrate_ode(sys, Eigen::VectorXd::Unit(n, k), grid);
    for (long i = 0; i < grid.steps; ++i) {
      const Eigen::VectorXd y = sys.output(traj.states.row(i + 1).transpose());
      for (int j = 0; j < p; ++j) ens.points(i * p + j, k) = y(j);
    }
  }
  return ens;
}

SampleEnsemble sde_trajectories(const ControlSystem& sys, const SimulationGrid& grid,
                                const StationaryPlan& plan) {
  grid.validate();
  if (plan.n_paths < 1) throw InputError("sde_trajectories: n_paths must be >= 1");
  if (!(plan.burn_in >= 0.0) || !std::isfinite(plan.burn_in)) {
    throw InputError("sde_trajectories: burn_in must be finite and >= 0");
  }
  if (plan.stride < 1) throw InputError("sde_trajectories: stride must be positive");
  if (plan.samples_per_path < 1) {
    throw InputError("sde_trajectories: samples_per_path must be positive");
  }

  const int n = sys.state_dim();
  const int q = sys.input_dim();
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  const long burn_steps = std::lround(plan.burn_in / dt);

  SampleEnsemble ens;
  ens.kind = EnsembleKind::kStationary;
  ens.channels = 0;
  ens.provenance = deterministic_provenance(sys, grid);
  ens.provenance.seed = plan.seed;
  ens.provenance.burn_in = plan.burn_in;
  ens.provenance.stride = plan.stride;
  ens.points.resize(plan.n_paths * plan.samples_per_path, n);

  parallel_for(plan.n_paths, [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
    Eigen::VectorXd xi(q);
    for (std::ptrdiff_t path = lo; path < hi; ++path) {
      const auto u = static_cast<std::uint64_t>(path);
      std::seed_seq seq{static_cast<std::uint32_t>(plan.seed), static_cast<std::uint32_t>(plan.seed >> 32),
                        static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(u >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal;
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      long step = 0;
      auto advance = [&](long count) {
        for (long k = 0; k < count; ++k) {
          for (int c = 0; c < q; ++c) xi(c) = normal(rng);
          x += sys.drift(x) * dt + sys.input_map(x) * (sqrt_dt * xi);
          ++step;
          if (!x.allFinite()) {
            throw DivergenceError("sde_trajectories: path " + std::to_string(path) +
                                      " diverged at t = " + time_string(dt * step),
                                  dt * step, static_cast<long>(path));
          }
        }
      };
      advance(burn_steps);
      for (long s = 0; s < plan.samples_per_path; ++s) {
        if (s > 0) advance(plan.stride);
        ens.points.row(path * plan.samples_per_path + s) = x.transpose();
      }
    }
  });
  return ens;
}

}  // namespace kgram
