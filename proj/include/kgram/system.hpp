#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace kgram {

// Exact (A, B, C) realization of a linear system.
struct LinearForm {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
};

/// Input-affine system  x' = f(x) + G(x) u,  y = h(x).
///
/// Construction checks f(0) = 0 and h(0) = 0, and, when a linear form is
/// attached, that the evaluators agree with Ax, B and Cx on random probes.
class ControlSystem {
 public:
  using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using InputMap = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using OutputMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  ControlSystem(std::string name, int n, int q, int p, VectorField drift, InputMap input_map,
                OutputMap output_map, std::optional<LinearForm> linear = std::nullopt);

  static ControlSystem linear(std::string name, Eigen::MatrixXd A, Eigen::MatrixXd B,
                              Eigen::MatrixXd C);

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int input_dim() const { return q_; }
  int output_dim() const { return p_; }

  Eigen::VectorXd drift(const Eigen::VectorXd& x) const { return drift_(x); }
  Eigen::MatrixXd input_map(const Eigen::VectorXd& x) const { return input_map_(x); }
  Eigen::VectorXd output(const Eigen::VectorXd& x) const { return output_map_(x); }
  const std::optional<LinearForm>& linear_form() const { return linear_; }

  // Hash of the evaluators sampled at fixed probe points plus the dimensions
  // and name. Two systems with equal fingerprints produce equal ensembles.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string name_;
  int n_, q_, p_;
  VectorField drift_;
  InputMap input_map_;
  OutputMap output_map_;
  std::optional<LinearForm> linear_;
  std::string fingerprint_;
};

/// Regular partition t_i = (T/N) i of [0, T].
struct SimulationGrid {
  double horizon = 1.0;
  long steps = 1;

  SimulationGrid() = default;
  SimulationGrid(double horizon, long steps);

  double dt() const { return horizon / static_cast<double>(steps); }
  double time(long i) const { return dt() * static_cast<double>(i); }
  // Throws InputError unless T > 0 and N >= 1.
  void validate() const;
};

}  // namespace kgram
