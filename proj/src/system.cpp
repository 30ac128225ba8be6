#include "kgram/system.hpp"

#include <cmath>
#include <random>

#include "kgram/errors.hpp"
#include "kgram/hash.hpp"

namespace kgram {

namespace {

constexpr double kOriginTolerance = 1e-10;
constexpr double kLinearTolerance = 1e-10;
constexpr int kLinearProbes = 10;

}  // namespace

ControlSystem::ControlSystem(std::string name, int n, int q, int p, VectorField drift,
                             InputMap input_map, OutputMap output_map,
                             std::optional<LinearForm> linear)
    : name_(std::move(name)),
      n_(n),
      q_(q),
      p_(p),
      drift_(std::move(drift)),
      input_map_(std::move(input_map)),
      output_map_(std::move(output_map)),
      linear_(std::move(linear)) {
  if (n_ < 1 || q_ < 1 || p_ < 1) {
    throw InputError("system '" + name_ + "': dimensions must be positive");
  }
  if (!drift_ || !input_map_ || !output_map_) {
    throw InputError("system '" + name_ + "': missing evaluator");
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
  const Eigen::VectorXd f0 = drift_(zero);
  const Eigen::MatrixXd g0 = input_map_(zero);
  const Eigen::VectorXd h0 = output_map_(zero);
  if (f0.size() != n_ || g0.rows() != n_ || g0.cols() != q_ || h0.size() != p_) {
    throw InputError("system '" + name_ + "': evaluator output has the wrong shape");
  }
  if (f0.lpNorm<Eigen::Infinity>() > kOriginTolerance) {
    throw InputError("system '" + name_ + "': drift must vanish at the origin");
  }
  if (h0.lpNorm<Eigen::Infinity>() > kOriginTolerance) {
    throw InputError("system '" + name_ + "': output map must vanish at the origin");
  }

  if (linear_) {
    const auto& L = *linear_;
    if (L.A.rows() != n_ || L.A.cols() != n_ || L.B.rows() != n_ || L.B.cols() != q_ ||
        L.C.rows() != p_ || L.C.cols() != n_) {
      throw InputError("system '" + name_ + "': linear form has the wrong shape");
    }
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    for (int k = 0; k < kLinearProbes; ++k) {
      Eigen::VectorXd x(n_);
      for (int i = 0; i < n_; ++i) x(i) = normal(rng);
      const double scale = 1.0 + x.norm();
      if ((drift_(x) - L.A * x).lpNorm<Eigen::Infinity>() > kLinearTolerance * scale ||
          (input_map_(x) - L.B).lpNorm<Eigen::Infinity>() > kLinearTolerance ||
          (output_map_(x) - L.C * x).lpNorm<Eigen::Infinity>() > kLinearTolerance * scale) {
        throw InputError("system '" + name_ + "': evaluators disagree with the linear form");
      }
    }
  }

  Fnv1a h;
  h.add(std::string_view(name_)).add(n_).add(q_).add(p_);
  std::mt19937_64 rng(0xf1f1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    Eigen::VectorXd x(n_);
    for (int i = 0; i < n_; ++i) x(i) = unif(rng);
    h.add_matrix(drift_(x)).add_matrix(input_map_(x)).add_matrix(output_map_(x));
  }
  fingerprint_ = h.hex();
}

ControlSystem ControlSystem::linear(std::string name, Eigen::MatrixXd A, Eigen::MatrixXd B,
                                    Eigen::MatrixXd C) {
  const int n = static_cast<int>(A.rows());
  const int q = static_cast<int>(B.cols());
  const int p = static_cast<int>(C.rows());
  LinearForm form{A, B, C};
  return ControlSystem(
      std::move(name), n, q, p, [A](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; },
      [B](const Eigen::VectorXd&) -> Eigen::MatrixXd { return B; },
      [C](const Eigen::VectorXd& x) -> Eigen::VectorXd { return C * x; }, std::move(form));
}

SimulationGrid::SimulationGrid(double horizon_, long steps_) : horizon(horizon_), steps(steps_) {
  validate();
}

void SimulationGrid::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InputError("simulation grid: horizon T must be positive and finite");
  }
  if (steps < 1) {
    throw InputError("simulation grid: step count N must be >= 1, got " + std::to_string(steps));
  }
}

}  // namespace kgram
