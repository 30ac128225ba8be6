#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace kgram {

// Sample sets are stored one point per row.
using PointSet = Eigen::MatrixXd;

enum class KernelFamily { kLinear, kPolynomial, kGaussian, kLaplacian, kExponentialL1 };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Mercer kernel family plus its parameters.
///
///   linear          x.y
///   polynomial      (1 + x.y)^degree
///   gaussian        exp(-|x-y|_2^2 / bandwidth^2)
///   laplacian       exp(-|x-y|_2 / bandwidth)
///   exponential_l1  exp(-|x-y|_1 / bandwidth)
///
/// The three translation-invariant families are bounded with K(x,x) = 1.
struct KernelSpec {
  KernelFamily family = KernelFamily::kGaussian;
  int degree = 1;
  double bandwidth = 1.0;

  static KernelSpec linear();
  static KernelSpec polynomial(int degree);
  static KernelSpec gaussian(double bandwidth);
  static KernelSpec laplacian(double bandwidth);
  static KernelSpec exponential_l1(double bandwidth);

  // Throws ParameterError for a non-positive bandwidth or degree.
  void validate() const;

  bool bounded() const;
  // sup_x K(x,x) when bounded (the squared kappa constant), +inf otherwise.
  double kappa_squared() const;
  std::string describe() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

// Gram matrix of the rows of `points`. Only the upper triangle is evaluated and
// then mirrored, so the result is exactly symmetric.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const PointSet& points);

// Entry mu is K(x, points.row(mu)).
Eigen::VectorXd kernel_vector(const KernelSpec& spec, const PointSet& points,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

// (i, mu) = K(probes.row(i), points.row(mu)).
Eigen::MatrixXd cross_kernel_matrix(const KernelSpec& spec, const PointSet& probes,
                                    const PointSet& points);

// H K H with H = I - 11^T / m.
Eigen::MatrixXd center_kernel_matrix(const Eigen::MatrixXd& gram);

// Median of the pairwise Euclidean distances among the first `max_points`
// rows. Deterministic; used as the default bandwidth.
double median_pairwise_distance(const PointSet& points, Eigen::Index max_points = 2000);

// Throws InputError if any entry is NaN or infinite. `what` names the argument.
void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& values, std::string_view what);

}  // namespace kgram
