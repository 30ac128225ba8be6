#include "kgram/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "kgram/errors.hpp"
#include "kgram/matrix_free.hpp"
#include "kgram/parallel.hpp"

namespace kgram {

namespace {

constexpr Eigen::Index kProbeChunk = 256;

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("regularization lambda must be positive and finite");
  }
}

void require_probability(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("delta must lie in (0, 1]");
}

double scale_of(const SampleEnsemble& ens, GramianScaling scaling) {
  return scaling == GramianScaling::kOneOverM ? 1.0 : ens.provenance.grid.horizon;
}

double median(std::vector<double> v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double med = *mid;
  if (v.size() % 2 == 0) med = 0.5 * (med + *std::max_element(v.begin(), mid));
  return med;
}

// Mean of K(., .)^2 over all pairs, computed in row blocks.
double mean_squared_kernel(const PointSet& a, const PointSet& b, const KernelSpec& kernel) {
  const Eigen::Index rows = a.rows();
  std::vector<double> partial(static_cast<size_t>((rows + kProbeChunk - 1) / kProbeChunk), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(partial.size()), [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
    for (std::ptrdiff_t c = lo; c < hi; ++c) {
      const Eigen::Index begin = c * kProbeChunk;
      const Eigen::Index len = std::min(kProbeChunk, rows - begin);
      partial[static_cast<size_t>(c)] =
          cross_kernel_matrix(kernel, a.middleRows(begin, len), b).array().square().sum();
    }
  });
  const double total = std::accumulate(partial.begin(), partial.end(), 0.0);
  return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

}  // namespace

std::string_view to_string(GramianScaling s) {
  return s == GramianScaling::kOneOverM ? "one_over_m" : "riemann_T_over_m";
}

GramianScaling gramian_scaling_from_string(std::string_view name) {
  if (name == "one_over_m") return GramianScaling::kOneOverM;
  if (name == "riemann_T_over_m") return GramianScaling::kRiemannTOverM;
  throw ParameterError("unknown gramian scaling '" + std::string(name) + "'");
}

std::string_view to_string(EnergyKind k) {
  return k == EnergyKind::kControllability ? "controllability" : "observability";
}

EnergyModel::EnergyModel(Parts parts) : p_(std::move(parts)) {
  p_.kernel.validate();
  const Eigen::Index m = p_.samples.size();
  if (m == 0) throw InputError("energy model: empty sample set");
  require_finite(p_.samples.points, "sample set");
  if (p_.kind == EnergyKind::kControllability) {
    require_lambda(p_.lambda);
    if (p_.eigenvalues.size() != m || p_.eigenvectors.rows() != m || p_.eigenvectors.cols() != m) {
      throw InputError("energy model: spectrum does not match the sample count");
    }
    if ((p_.eigenvalues.array() < 0.0).any()) {
      throw InputError("energy model: eigenvalues must be clipped at zero");
    }
    if (p_.centered && p_.gram_col_means.size() != m) {
      throw InputError("energy model: centering statistics missing");
    }
  } else {
    p_.lambda = 0.0;
    p_.centered = false;
    p_.eigenvalues.resize(0);
    p_.eigenvectors.resize(0, 0);
  }
}

double EnergyModel::scale_factor() const { return scale_of(p_.samples, p_.scaling); }

bool EnergyModel::rank_deficient() const {
  if (p_.kind != EnergyKind::kControllability) return false;
  const double top = p_.eigenvalues.maxCoeff();
  return p_.eigenvalues.minCoeff() <=
         std::numeric_limits<double>::epsilon() * static_cast<double>(m()) * top;
}

Eigen::VectorXd EnergyModel::feature_vector(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd k = kernel_vector(p_.kernel, p_.samples.points, x);
  if (p_.centered) {
    k.array() += p_.gram_grand_mean - k.mean();
    k -= p_.gram_col_means;
  }
  return k;
}

Eigen::MatrixXd EnergyModel::feature_matrix(const PointSet& probes) const {
  if (probes.cols() != dim()) {
    throw InputError("probe dimension " + std::to_string(probes.cols()) +
                     " does not match the model dimension " + std::to_string(dim()));
  }
  Eigen::MatrixXd k = cross_kernel_matrix(p_.kernel, probes, p_.samples.points);
  if (p_.centered) {
    const Eigen::VectorXd row_means = k.rowwise().mean();
    k.colwise() -= row_means;
    k.rowwise() -= p_.gram_col_means.transpose();
    k.array() += p_.gram_grand_mean;
  }
  return k;
}

EnergyModel fit_controllability(const SampleEnsemble& ens, const KernelSpec& kernel, double lambda,
                                const ControllabilityOptions& options) {
  require_lambda(lambda);
  kernel.validate();
  if (ens.size() == 0) throw InputError("fit_controllability: empty ensemble");
  const double m = static_cast<double>(ens.size());

  EnergyModel::Parts parts;
  parts.kind = EnergyKind::kControllability;
  parts.samples = ens;
  parts.kernel = kernel;
  parts.lambda = lambda;
  parts.scaling = options.scaling;
  parts.centered = options.center;

  Eigen::MatrixXd gram = kernel_matrix(kernel, ens.points);
  if (options.center) {
    parts.gram_col_means = gram.colwise().mean().transpose();
    parts.gram_grand_mean = parts.gram_col_means.mean();
    gram = center_kernel_matrix(gram);
  }
  gram *= scale_of(ens, options.scaling) / m;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw NumericError("fit_controllability: eigendecomposition failed");
  }
  parts.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
  parts.eigenvectors = eig.eigenvectors();
  return EnergyModel(std::move(parts));
}

EnergyModel fit_observability(const SampleEnsemble& ens, const KernelSpec& kernel,
                              GramianScaling scaling) {
  kernel.validate();
  if (ens.size() == 0) throw InputError("fit_observability: empty ensemble");
  EnergyModel::Parts parts;
  parts.kind = EnergyKind::kObservability;
  parts.samples = ens;
  parts.kernel = kernel;
  parts.scaling = scaling;
  return EnergyModel(std::move(parts));
}

double eval_Lc(const EnergyModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (model.kind() != EnergyKind::kControllability) {
    throw InputError("eval_Lc needs a controllability model");
  }
  if (x.size() != model.dim()) {
    throw InputError("eval_Lc: point dimension " + std::to_string(x.size()) +
                     " does not match the model dimension " + std::to_string(model.dim()));
  }
  const Eigen::VectorXd proj = model.eigenvectors().transpose() * model.feature_vector(x);
  const Eigen::ArrayXd shifted = model.eigenvalues().array() + model.lambda();
  const double s = model.scale_factor();
  return s / (2.0 * static_cast<double>(model.m())) * (proj.array() / shifted).square().sum();
}

double eval_Lo(const EnergyModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (model.kind() != EnergyKind::kObservability) {
    throw InputError("eval_Lo needs an observability model");
  }
  if (x.size() != model.dim()) {
    throw InputError("eval_Lo: point dimension " + std::to_string(x.size()) +
                     " does not match the model dimension " + std::to_string(model.dim()));
  }
  const double s = model.scale_factor();
  return s / (2.0 * static_cast<double>(model.m())) * model.feature_vector(x).squaredNorm();
}

Eigen::VectorXd eval_Lc_batch(const EnergyModel& model, const PointSet& probes) {
  if (model.kind() != EnergyKind::kControllability) {
    throw InputError("eval_Lc_batch needs a controllability model");
  }
  const Eigen::Index n = probes.rows();
  Eigen::VectorXd out(n);
  const Eigen::ArrayXd inv_shift = (model.eigenvalues().array() + model.lambda()).inverse();
  const double c = model.scale_factor() / (2.0 * static_cast<double>(model.m()));
  const std::ptrdiff_t chunks = (n + kProbeChunk - 1) / kProbeChunk;
  parallel_for(chunks, [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
    for (std::ptrdiff_t ch = lo; ch < hi; ++ch) {
      const Eigen::Index begin = ch * kProbeChunk;
      const Eigen::Index len = std::min(kProbeChunk, n - begin);
      const Eigen::MatrixXd proj =
          model.feature_matrix(probes.middleRows(begin, len)) * model.eigenvectors();
      out.segment(begin, len) =
          c * (proj.array().rowwise() * inv_shift.transpose()).square().rowwise().sum();
    }
  });
  return out;
}

Eigen::VectorXd eval_Lo_batch(const EnergyModel& model, const PointSet& probes) {
  if (model.kind() != EnergyKind::kObservability) {
    throw InputError("eval_Lo_batch needs an observability model");
  }
  const Eigen::Index n = probes.rows();
  Eigen::VectorXd out(n);
  const double c = model.scale_factor() / (2.0 * static_cast<double>(model.m()));
  const std::ptrdiff_t chunks = (n + kProbeChunk - 1) / kProbeChunk;
  parallel_for(chunks, [&](std::ptrdiff_t lo, std::ptrdiff_t hi) {
    for (std::ptrdiff_t ch = lo; ch < hi; ++ch) {
      const Eigen::Index begin = ch * kProbeChunk;
      const Eigen::Index len = std::min(kProbeChunk, n - begin);
      out.segment(begin, len) =
          c * model.feature_matrix(probes.middleRows(begin, len)).rowwise().squaredNorm();
    }
  });
  return out;
}

double consistency_bound(double kappa, double lambda, long m, double delta) {
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  require_lambda(lambda);
  if (m < 1) throw ParameterError("m must be >= 1");
  require_probability(delta);
  const double k4 = std::pow(kappa, 4);
  return 2.0 * std::sqrt(2.0) * k4 * (lambda * lambda + k4) /
         (std::pow(lambda, 4) * std::sqrt(static_cast<double>(m))) * std::sqrt(std::log(2.0 / delta));
}

double hs_covariance_bound(double kappa, long m, double delta) {
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  if (m < 1) throw ParameterError("m must be >= 1");
  require_probability(delta);
  return 2.0 * std::sqrt(2.0) * kappa * kappa / std::sqrt(static_cast<double>(m)) *
         std::sqrt(std::log(2.0 / delta));
}

double hs_distance(const PointSet& a, const PointSet& b, const KernelSpec& kernel) {
  if (a.rows() == 0 || b.rows() == 0) throw InputError("hs_distance: empty ensemble");
  if (a.cols() != b.cols()) throw InputError("hs_distance: ensembles differ in dimension");
  const double radicand = mean_squared_kernel(a, a, kernel) - 2.0 * mean_squared_kernel(a, b, kernel) +
                          mean_squared_kernel(b, b, kernel);
  return std::sqrt(std::max(radicand, 0.0));
}

double hs_distance(const SampleEnsemble& a, const SampleEnsemble& b, const KernelSpec& kernel) {
  return hs_distance(a.points, b.points, kernel);
}

double lambda_schedule(long m) {
  if (m < 2) throw ParameterError("lambda_schedule needs m >= 2");
  return 1.0 / std::sqrt(std::log(static_cast<double>(m)));
}

ConsistencyReport nested_consistency_study(const PointSet& pool, const KernelSpec& kernel,
                                           double lambda, const std::vector<long>& m_values,
                                           long factor, const PointSet& probes, double delta) {
  require_lambda(lambda);
  require_probability(delta);
  if (!kernel.bounded()) throw ParameterError("nested_consistency_study needs a bounded kernel");
  if (factor < 2) throw ParameterError("nesting factor must be >= 2");
  if (m_values.size() < 2) throw ParameterError("need at least two sample sizes");
  if (probes.rows() == 0) throw InputError("nested_consistency_study: no probes");

  ConsistencyReport report;
  report.delta = delta;
  report.factor = factor;
  report.kappa = std::sqrt(kernel.kappa_squared());
  for (long m : m_values) {
    if (m < 1 || m * factor > pool.rows()) {
      throw InputError("pool has " + std::to_string(pool.rows()) + " points; need " +
                       std::to_string(m * factor));
    }
    const Eigen::VectorXd small = eval_Lc_matrix_free(pool.topRows(m), kernel, lambda, probes);
    const Eigen::VectorXd large = eval_Lc_matrix_free(pool.topRows(m * factor), kernel, lambda, probes);
    const Eigen::VectorXd dev = (small - large).cwiseAbs();
    report.m_values.push_back(m);
    report.lambdas.push_back(lambda);
    report.median_deviations.push_back(median({dev.data(), dev.data() + dev.size()}));
    report.max_deviations.push_back(dev.maxCoeff());
    report.bounds.push_back(consistency_bound(report.kappa, lambda, m, delta));
  }
  // Least squares on (log m, log median deviation).
  const auto k = static_cast<Eigen::Index>(m_values.size());
  Eigen::MatrixXd design(k, 2);
  Eigen::VectorXd y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(static_cast<double>(report.m_values[static_cast<size_t>(i)]));
    y(i) = std::log(report.median_deviations[static_cast<size_t>(i)]);
  }
  report.fitted_slope = design.colPivHouseholderQr().solve(y)(1);
  return report;
}

}  // namespace kgram
