#include "kgram/matrix_free.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "kgram/errors.hpp"
#include "kgram/parallel.hpp"

namespace kgram {

namespace {

class DenseOperator final : public KernelOperator {
 public:
  DenseOperator(const KernelSpec& kernel, const PointSet& samples)
      : gram_(kernel_matrix(kernel, samples)) {}
  Eigen::Index size() const override { return gram_.rows(); }
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const override {
    out.noalias() = gram_.selfadjointView<Eigen::Upper>() * in;
  }

 private:
  Eigen::MatrixXd gram_;
};

class StreamingOperator final : public KernelOperator {
 public:
  StreamingOperator(const KernelSpec& kernel, const PointSet& samples)
      : kernel_(kernel), samples_(samples) {}
  Eigen::Index size() const override { return samples_.rows(); }
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const override {
    constexpr Eigen::Index kBlock = 512;
    const Eigen::Index m = size();
    out.resize(m, in.cols());
    const std::ptrdiff_t blocks = (m + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
      for (std::ptrdiff_t b = lo; b < hi; ++b) {
        const Eigen::Index begin = b * kBlock;
        const Eigen::Index len = std::min(kBlock, m - begin);
        out.middleRows(begin, len).noalias() =
            cross_kernel_matrix(kernel_, samples_.middleRows(begin, len), samples_) * in;
      }
    });
  }

 private:
  KernelSpec kernel_;
  PointSet samples_;
};

// sum_j exp(-|s_i - s_j| / b) c_j on sorted points s as a forward sweep over
// j <= i plus a backward sweep over j > i. Every decay factor is <= 1.
class SortedExponential1D final : public KernelOperator {
 public:
  SortedExponential1D(const PointSet& samples, double bandwidth) {
    const Eigen::Index m = samples.rows();
    order_.resize(static_cast<size_t>(m));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return samples(a, 0) < samples(b, 0); });
    decay_.resize(m);
    decay_(0) = 0.0;
    for (Eigen::Index i = 1; i < m; ++i) {
      const double gap = samples(order_[static_cast<size_t>(i)], 0) -
                         samples(order_[static_cast<size_t>(i - 1)], 0);
      decay_(i) = std::exp(-gap / bandwidth);
    }
  }
  Eigen::Index size() const override { return decay_.size(); }
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const override {
    const Eigen::Index m = size();
    out.resize(m, in.cols());
    Eigen::VectorXd fwd(m), bwd(m);
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      fwd(0) = in(order_[0], c);
      for (Eigen::Index i = 1; i < m; ++i) {
        fwd(i) = in(order_[static_cast<size_t>(i)], c) + decay_(i) * fwd(i - 1);
      }
      bwd(m - 1) = 0.0;
      for (Eigen::Index i = m - 2; i >= 0; --i) {
        bwd(i) = decay_(i + 1) * (in(order_[static_cast<size_t>(i + 1)], c) + bwd(i + 1));
      }
      for (Eigen::Index i = 0; i < m; ++i) out(order_[static_cast<size_t>(i)], c) = fwd(i) + bwd(i);
    }
  }

 private:
  std::vector<Eigen::Index> order_;
  // decay_(i) = exp(-(s_i - s_{i-1}) / b) in sorted order.
  Eigen::VectorXd decay_;
};

}  // namespace

std::unique_ptr<KernelOperator> make_kernel_operator(const KernelSpec& kernel,
                                                     const PointSet& samples,
                                                     Eigen::Index dense_limit) {
  kernel.validate();
  if (samples.rows() == 0) throw InputError("kernel operator: empty sample set");
  require_finite(samples, "sample set");
  const bool exp_1d = samples.cols() == 1 && (kernel.family == KernelFamily::kLaplacian ||
                                               kernel.family == KernelFamily::kExponentialL1);
  if (exp_1d) return std::make_unique<SortedExponential1D>(samples, kernel.bandwidth);
  if (samples.rows() <= dense_limit) return std::make_unique<DenseOperator>(kernel, samples);
  return std::make_unique<StreamingOperator>(kernel, samples);
}

Eigen::MatrixXd solve_shifted(const KernelOperator& op, double c, double lambda,
                              const Eigen::MatrixXd& rhs, const CgOptions& options) {
  if (!(lambda > 0.0)) throw ParameterError("solve_shifted: lambda must be positive");
  if (rhs.rows() != op.size()) throw InputError("solve_shifted: right-hand side has the wrong size");
  const Eigen::Index k = rhs.cols();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(rhs.rows(), k);
  Eigen::MatrixXd r = rhs;
  Eigen::MatrixXd p = r;
  Eigen::MatrixXd ap(rhs.rows(), k);
  Eigen::ArrayXd rr = r.colwise().squaredNorm().transpose();
  const Eigen::ArrayXd target =
      (options.relative_tolerance * rhs.colwise().norm().transpose().array()).square();
  for (int it = 0; it < options.max_iterations; ++it) {
    if ((rr <= target).all()) return x;
    op.apply(p, ap);
    ap = c * ap + lambda * p;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (rr(j) <= target(j)) continue;
      const double alpha = rr(j) / p.col(j).dot(ap.col(j));
      x.col(j) += alpha * p.col(j);
      r.col(j) -= alpha * ap.col(j);
      const double rr_new = r.col(j).squaredNorm();
      p.col(j) = r.col(j) + (rr_new / rr(j)) * p.col(j);
      rr(j) = rr_new;
    }
  }
  if ((rr <= target).all()) return x;
  throw NumericError("conjugate gradients did not converge in " +
                     std::to_string(options.max_iterations) + " iterations");
}

Eigen::VectorXd eval_Lc_matrix_free(const PointSet& samples, const KernelSpec& kernel,
                                    double lambda, const PointSet& probes,
                                    const CgOptions& options) {
  if (probes.cols() != samples.cols()) {
    throw InputError("eval_Lc_matrix_free: probes and samples differ in dimension");
  }
  const auto op = make_kernel_operator(kernel, samples);
  const double m = static_cast<double>(samples.rows());
  const Eigen::MatrixXd kx = cross_kernel_matrix(kernel, probes, samples).transpose();
  const Eigen::MatrixXd sol = solve_shifted(*op, 1.0 / m, lambda, kx, options);
  return sol.colwise().squaredNorm().transpose() / (2.0 * m);
}

}  // namespace kgram
