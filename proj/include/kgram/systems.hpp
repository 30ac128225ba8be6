#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgram/system.hpp"

namespace kgram {

// Builtin test systems. Parameters not given take their defaults.
//
//   linear2d              x' = [[0,1],[-2,-3]] x + (0,1)^T u,   y = x1
//   scalar_ou             x' = -a x + b u,                       y = x
//                         (a = 1, b = 1)
//   double_well           x' = x - x^3 + sigma u,                y = x
//                         (sigma = 0.7)
//   vanderpol_stabilized  x1' = x2,
//                         x2' = -x1 - mu (1 - x1^2) x2 + g u,   y = x1
//                         (mu = 1, g = 0.3; the damping sign is flipped so
//                         the origin is stable)
ControlSystem make_builtin_system(const std::string& name,
                                  const std::map<std::string, double>& params = {});

std::vector<std::string> builtin_system_names();

// Analytic stationary density for builtins that have one (linear2d, scalar_ou:
// Gaussian with the Lyapunov covariance; double_well: proportional to
// exp(2 (x^2/2 - x^4/4) / sigma^2), normalized by quadrature).
// Returns an empty function otherwise.
std::function<double(const Eigen::VectorXd&)> builtin_stationary_density(
    const std::string& name, const std::map<std::string, double>& params = {});

/// Polynomial vector field: each drift component is a sum of monomials
/// coef * prod_k x_k^power_k. The input map is a constant matrix and the output
/// map is linear. Monomials with all powers zero are rejected (drift(0) = 0).
struct Monomial {
  double coef = 0.0;
  std::vector<int> powers;
};

struct PolynomialSystemSpec {
  std::string name = "polynomial";
  int n = 1;
  std::vector<std::vector<Monomial>> drift;
  Eigen::MatrixXd input;
  Eigen::MatrixXd output;
};

ControlSystem make_polynomial_system(const PolynomialSystemSpec& spec);

}  // namespace kgram
