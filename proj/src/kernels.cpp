#include "kgram/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "kgram/errors.hpp"

namespace kgram {

namespace {

double eval_unchecked(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y) {
  switch (spec.family) {
    case KernelFamily::kLinear:
      return x.dot(y);
    case KernelFamily::kPolynomial:
      return std::pow(1.0 + x.dot(y), spec.degree);
    case KernelFamily::kGaussian: {
      const double s = spec.bandwidth;
      return std::exp(-(x - y).squaredNorm() / (s * s));
    }
    case KernelFamily::kLaplacian:
      return std::exp(-(x - y).norm() / spec.bandwidth);
    case KernelFamily::kExponentialL1:
      return std::exp(-(x - y).lpNorm<1>() / spec.bandwidth);
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kLinear: return "linear";
    case KernelFamily::kPolynomial: return "polynomial";
    case KernelFamily::kGaussian: return "gaussian";
    case KernelFamily::kLaplacian: return "laplacian";
    case KernelFamily::kExponentialL1: return "exponential_l1";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  for (auto f : {KernelFamily::kLinear, KernelFamily::kPolynomial, KernelFamily::kGaussian,
                 KernelFamily::kLaplacian, KernelFamily::kExponentialL1}) {
    if (to_string(f) == name) return f;
  }
  throw ParameterError("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec KernelSpec::linear() { return {KernelFamily::kLinear, 1, 1.0}; }

KernelSpec KernelSpec::polynomial(int degree) {
  KernelSpec s{KernelFamily::kPolynomial, degree, 1.0};
  s.validate();
  return s;
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec s{KernelFamily::kGaussian, 1, bandwidth};
  s.validate();
  return s;
}

KernelSpec KernelSpec::laplacian(double bandwidth) {
  KernelSpec s{KernelFamily::kLaplacian, 1, bandwidth};
  s.validate();
  return s;
}

KernelSpec KernelSpec::exponential_l1(double bandwidth) {
  KernelSpec s{KernelFamily::kExponentialL1, 1, bandwidth};
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  if (family == KernelFamily::kPolynomial && degree < 1) {
    throw ParameterError("polynomial kernel degree must be >= 1, got " + std::to_string(degree));
  }
  if (bounded() && !(bandwidth > 0.0 && std::isfinite(bandwidth))) {
    throw ParameterError("kernel bandwidth must be positive and finite");
  }
}

bool KernelSpec::bounded() const {
  return family == KernelFamily::kGaussian || family == KernelFamily::kLaplacian ||
         family == KernelFamily::kExponentialL1;
}

double KernelSpec::kappa_squared() const {
  return bounded() ? 1.0 : std::numeric_limits<double>::infinity();
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(family);
  if (family == KernelFamily::kPolynomial) os << "(degree=" << degree << ")";
  if (bounded()) os << "(bandwidth=" << bandwidth << ")";
  return os.str();
}

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& values, std::string_view what) {
  if (!values.allFinite()) {
    throw InputError(std::string(what) + " contains non-finite values");
  }
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  spec.validate();
  if (x.size() != y.size()) {
    throw InputError("kernel arguments differ in dimension: " + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()));
  }
  require_finite(x, "kernel argument x");
  require_finite(y, "kernel argument y");
  return eval_unchecked(spec, x, y);
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const PointSet& points) {
  spec.validate();
  if (points.rows() == 0) throw InputError("kernel_matrix: empty sample set");
  require_finite(points, "sample set");
  const Eigen::Index m = points.rows();
  // Row-major point access is strided in a column-major PointSet; copy once.
  const Eigen::MatrixXd cols = points.transpose();
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      gram(i, j) = eval_unchecked(spec, cols.col(i), cols.col(j));
    }
  }
  gram.triangularView<Eigen::StrictlyLower>() = gram.transpose();
  return gram;
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const PointSet& points,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
  spec.validate();
  if (points.rows() == 0) throw InputError("kernel_vector: empty sample set");
  if (points.cols() != x.size()) {
    throw InputError("kernel_vector: point has dimension " + std::to_string(x.size()) +
                     ", samples have " + std::to_string(points.cols()));
  }
  require_finite(x, "evaluation point");
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index mu = 0; mu < points.rows(); ++mu) {
    out(mu) = eval_unchecked(spec, x, points.row(mu).transpose());
  }
  return out;
}

Eigen::MatrixXd cross_kernel_matrix(const KernelSpec& spec, const PointSet& probes,
                                    const PointSet& points) {
  spec.validate();
  if (points.rows() == 0) throw InputError("cross_kernel_matrix: empty sample set");
  if (probes.cols() != points.cols()) {
    throw InputError("cross_kernel_matrix: probes and samples differ in dimension");
  }
  require_finite(probes, "probe set");
  require_finite(points, "sample set");
  const Eigen::MatrixXd a = probes.transpose();
  const Eigen::MatrixXd b = points.transpose();
  Eigen::MatrixXd out(probes.rows(), points.rows());
  for (Eigen::Index mu = 0; mu < b.cols(); ++mu) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      out(i, mu) = eval_unchecked(spec, a.col(i), b.col(mu));
    }
  }
  return out;
}

Eigen::MatrixXd center_kernel_matrix(const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols()) {
    throw InputError("center_kernel_matrix: matrix is not square");
  }
  if (gram.rows() == 0) throw InputError("center_kernel_matrix: empty matrix");
  // H K H = K - 1 r^T - c 1^T + g 11^T with row/column means r, c and grand mean g.
  const Eigen::VectorXd col_mean = gram.colwise().mean().transpose();
  const Eigen::VectorXd row_mean = gram.rowwise().mean();
  const double grand = col_mean.mean();
  Eigen::MatrixXd out = gram;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean.transpose();
  out.array() += grand;
  // Symmetrize to remove the round-off asymmetry of the two mean passes.
  return 0.5 * (out + out.transpose());
}

double median_pairwise_distance(const PointSet& points, Eigen::Index max_points) {
  const Eigen::Index m = std::min(points.rows(), max_points);
  if (m < 2) throw InputError("median_pairwise_distance: need at least two points");
  require_finite(points, "sample set");
  std::vector<double> d;
  d.reserve(static_cast<size_t>(m * (m - 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      d.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), mid));
  }
  if (!(med > 0.0)) {
    throw InputError("median_pairwise_distance: samples are all identical");
  }
  return med;
}

}  // namespace kgram
