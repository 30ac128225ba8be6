#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>

#include "kgram/simulate.hpp"

namespace kgram {

struct LinearGramians {
  Eigen::MatrixXd Wc;
  Eigen::MatrixXd Wo;
};

struct LinearEnergies {
  double controllability = 0.0;
  double observability = 0.0;
};

// Solves A W + W A^T = -Q by Kronecker vectorization; the result is
// symmetrized. Throws SpectrumError (listing the offending eigenvalues) when A
// is not Hurwitz and InputError when Q is not symmetric PSD.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

// Wc from A Wc + Wc A^T = -B B^T and Wo from A^T Wo + Wo A = -C^T C.
LinearGramians linear_gramians(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& C);

// Lc = x^T Wc^{-1} x / 2 and Lo = x^T Wo x / 2. Throws SingularityError when Wc
// cannot be inverted; use a regularized estimator in that case.
LinearEnergies linear_energies(const LinearGramians& g, const Eigen::VectorXd& x);

// Riemann-sum gramians (T / (N q)) sum x x^T and (T / (N p)) sum d d^T from
// impulse and release ensembles.
LinearGramians empirical_linear_gramians(const SampleEnsemble& controllability,
                                         const SampleEnsemble& observability,
                                         const SimulationGrid& grid);

// Stationary density of dX = A X dt + B dW, a zero-mean Gaussian with
// covariance Wc.
double ou_stationary_density(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::VectorXd& x);

/// Gaussian with covariance Wc, factored once for repeated evaluation.
class OuStationaryDensity {
 public:
  OuStationaryDensity(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

  const Eigen::MatrixXd& covariance() const { return wc_; }
  // ln Z with Z = sqrt((2 pi)^n det Wc).
  double log_normalizer() const { return log_z_; }
  // x^T Wc^{-1} x / 2, the linear controllability energy.
  double energy(const Eigen::VectorXd& x) const;
  double log_density(const Eigen::VectorXd& x) const { return -energy(x) - log_z_; }
  double operator()(const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd wc_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_z_ = 0.0;
};

std::string to_json(const LinearGramians& g);
LinearGramians linear_gramians_from_json(const std::string& text);

}  // namespace kgram
