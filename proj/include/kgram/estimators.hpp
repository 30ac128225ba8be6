#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kgram/kernels.hpp"
#include "kgram/simulate.hpp"

namespace kgram {

// Weight in front of the empirical RKHS gramian: 1/m (the default, which the
// energy definitions use) or T/m (the Riemann weight of the impulse sum;
// equivalent to rescaling lambda by 1/T).
enum class GramianScaling { kOneOverM, kRiemannTOverM };

std::string_view to_string(GramianScaling s);
GramianScaling gramian_scaling_from_string(std::string_view name);

enum class EnergyKind { kControllability, kObservability };

std::string_view to_string(EnergyKind k);

struct ControllabilityOptions {
  GramianScaling scaling = GramianScaling::kOneOverM;
  // Center the samples in feature space before forming the gram matrix.
  bool center = false;
};

/// Fitted kernel energy estimator. Immutable after construction; concurrent
/// evaluation from many threads is safe.
///
/// Controllability models keep the eigendecomposition (s/m) K = V diag(sigma) V^T
/// of the scaled gram matrix (s = 1 or T) with eigenvalues clipped at zero.
/// Observability models keep only the samples.
class EnergyModel {
 public:
  struct Parts {
    EnergyKind kind = EnergyKind::kControllability;
    SampleEnsemble samples;
    KernelSpec kernel;
    double lambda = 0.0;
    GramianScaling scaling = GramianScaling::kOneOverM;
    bool centered = false;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    // Column means and grand mean of the uncentered gram matrix; only used
    // when centered.
    Eigen::VectorXd gram_col_means;
    double gram_grand_mean = 0.0;
  };

  // Validates the invariants of `parts` (lambda > 0 for controllability,
  // spectrum shape, non-negative eigenvalues) and throws on violation.
  explicit EnergyModel(Parts parts);

  EnergyKind kind() const { return p_.kind; }
  const SampleEnsemble& samples() const { return p_.samples; }
  const KernelSpec& kernel() const { return p_.kernel; }
  double lambda() const { return p_.lambda; }
  Eigen::Index m() const { return p_.samples.size(); }
  Eigen::Index dim() const { return p_.samples.dim(); }
  GramianScaling scaling() const { return p_.scaling; }
  // s in (s/m) K.
  double scale_factor() const;
  bool centered() const { return p_.centered; }
  const Eigen::VectorXd& eigenvalues() const { return p_.eigenvalues; }
  const Eigen::MatrixXd& eigenvectors() const { return p_.eigenvectors; }
  const Parts& parts() const { return p_; }

  // True when the smallest retained eigenvalue is zero at machine precision;
  // the invariant measure may then not be unique.
  bool rank_deficient() const;

  // Kernel vector of x against the samples, centered when the model is.
  Eigen::VectorXd feature_vector(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Same for a batch of probes (one per row); result is probes x m.
  Eigen::MatrixXd feature_matrix(const PointSet& probes) const;

 private:
  Parts p_;
};

// Builds K_c (optionally centered) and the clipped spectrum of (s/m) K_c.
// Throws ParameterError when lambda <= 0 and InputError on an empty ensemble.
EnergyModel fit_controllability(const SampleEnsemble& ens, const KernelSpec& kernel, double lambda,
                                const ControllabilityOptions& options = {});

// Observability models use neither lambda nor centering.
EnergyModel fit_observability(const SampleEnsemble& ens, const KernelSpec& kernel,
                              GramianScaling scaling = GramianScaling::kOneOverM);

// (s/(2m)) k_c(x)^T ((s/m) K_c + lambda I)^{-2} k_c(x), evaluated as
// (s/(2m)) sum_j (v_j . k_c(x))^2 / (sigma_j + lambda)^2.
double eval_Lc(const EnergyModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// (s/(2m)) |k_o(x)|^2.
double eval_Lo(const EnergyModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Batch versions over probes (one per row). Chunked and parallel over probes.
Eigen::VectorXd eval_Lc_batch(const EnergyModel& model, const PointSet& probes);
Eigen::VectorXd eval_Lo_batch(const EnergyModel& model, const PointSet& probes);

// 2 sqrt(2) kappa^4 (lambda^2 + kappa^4) / (lambda^4 sqrt(m)) sqrt(log(2/delta)):
// high-probability bound on |L_{c,m}^lambda(x) - L_c^lambda(x)|.
double consistency_bound(double kappa, double lambda, long m, double delta);

// 2 sqrt(2) kappa^2 / sqrt(m) sqrt(log(2/delta)): high-probability bound on the
// Hilbert-Schmidt distance between the empirical and population covariance
// operators.
double hs_covariance_bound(double kappa, long m, double delta);

// Hilbert-Schmidt distance between the empirical covariance operators
// (1/m) sum Phi(a) (x) Phi(a) and (1/m') sum Phi(b) (x) Phi(b), via kernel traces.
double hs_distance(const SampleEnsemble& a, const SampleEnsemble& b, const KernelSpec& kernel);
double hs_distance(const PointSet& a, const PointSet& b, const KernelSpec& kernel);

// 1 / sqrt(log m), m >= 2.
double lambda_schedule(long m);

struct ConsistencyReport {
  std::vector<long> m_values;
  std::vector<double> lambdas;
  // Median and max over probes of |L_{c,m} - L_{c,factor*m}| (nested samples).
  std::vector<double> median_deviations;
  std::vector<double> max_deviations;
  std::vector<double> bounds;
  double delta = 0.05;
  double kappa = 1.0;
  long factor = 16;
  // Least-squares slope of log(median deviation) against log(m).
  double fitted_slope = 0.0;
};

// Nested-sample proxy for the sample-error bound: the first m rows of `pool`
// against its first factor*m rows, for each m. Uses the matrix-free solver, so
// factor*max(m) may be large. Requires a bounded kernel.
ConsistencyReport nested_consistency_study(const PointSet& pool, const KernelSpec& kernel,
                                           double lambda, const std::vector<long>& m_values,
                                           long factor, const PointSet& probes, double delta);

}  // namespace kgram
