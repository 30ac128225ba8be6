#pragma once

#include <memory>

#include <Eigen/Dense>

#include "kgram/estimators.hpp"
#include "kgram/kernels.hpp"

namespace kgram {

// y = K x for the gram matrix of a fixed sample set, without requiring K to be
// stored.
class KernelOperator {
 public:
  virtual ~KernelOperator() = default;
  virtual Eigen::Index size() const = 0;
  // out = K * in, in and out of shape size() x k.
  virtual void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const = 0;
};

// Picks the cheapest exact operator: an O(m) two-sweep recursion for
// one-dimensional exp(-|x-y|/s) kernels (laplacian and exponential_l1 agree in
// 1-D), a stored gram matrix when it fits in `dense_limit` rows, and on-the-fly
// row evaluation otherwise.
std::unique_ptr<KernelOperator> make_kernel_operator(const KernelSpec& kernel,
                                                     const PointSet& samples,
                                                     Eigen::Index dense_limit = 4000);

struct CgOptions {
  double relative_tolerance = 1e-13;
  int max_iterations = 1000;
};

// Solves (c K + lambda I) X = B column by column with conjugate gradients.
// Throws NumericError if a column fails to converge.
Eigen::MatrixXd solve_shifted(const KernelOperator& op, double c, double lambda,
                              const Eigen::MatrixXd& rhs, const CgOptions& options = {});

// Controllability energy of `probes` (one per row) without an
// eigendecomposition: (s/(2m)) |((s/m) K + lambda I)^{-1} k(x)|^2 with s = 1.
// Agrees with eval_Lc on an uncentered model up to solver tolerance.
Eigen::VectorXd eval_Lc_matrix_free(const PointSet& samples, const KernelSpec& kernel,
                                    double lambda, const PointSet& probes,
                                    const CgOptions& options = {});

}  // namespace kgram
