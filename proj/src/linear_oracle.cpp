#include "kgram/linear_oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "kgram/errors.hpp"

namespace kgram {

namespace {

void require_square(const Eigen::MatrixXd& M, const char* what) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw InputError(std::string(what) + " must be a non-empty square matrix");
  }
}

void require_hurwitz(const Eigen::MatrixXd& A) {
  const Eigen::VectorXcd eig = A.eigenvalues();
  std::ostringstream bad;
  bool ok = true;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (!(eig(i).real() < 0.0)) {
      bad << (ok ? "" : ", ") << eig(i).real() << (eig(i).imag() >= 0 ? "+" : "") << eig(i).imag()
          << "i";
      ok = false;
    }
  }
  if (!ok) throw SpectrumError("matrix is not Hurwitz; eigenvalues with Re >= 0: " + bad.str());
}

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols) throw InputError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = j.at(i).at(c).get<double>();
  }
  return M;
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  require_square(A, "A");
  require_square(Q, "Q");
  if (A.rows() != Q.rows()) throw InputError("A and Q differ in size");
  require_finite(A, "A");
  require_finite(Q, "Q");
  const double qnorm = Q.norm();
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(qnorm, 1.0)) {
    throw InputError("Q must be symmetric");
  }
  if (qnorm > 0.0) {
    const double qmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    if (qmin < -1e-10 * qnorm) throw InputError("Q must be positive semidefinite");
  }
  require_hurwitz(A);

  // vec(A W + W A^T) = (I kron A + A kron I) vec(W), column-major vec.
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    L.block(j * n, j * n, n, n) += A;
    for (Eigen::Index i = 0; i < n; ++i) {
      L.block(i * n, j * n, n, n) += A(i, j) * I;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::VectorXd w = L.partialPivLu().solve(rhs);
  const Eigen::MatrixXd W = Eigen::Map<const Eigen::MatrixXd>(w.data(), n, n);
  return 0.5 * (W + W.transpose());
}

LinearGramians linear_gramians(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& C) {
  if (B.rows() != A.rows() || C.cols() != A.cols()) throw InputError("A, B, C shapes disagree");
  return {solve_lyapunov(A, B * B.transpose()),
          solve_lyapunov(A.transpose(), C.transpose() * C)};
}

LinearEnergies linear_energies(const LinearGramians& g, const Eigen::VectorXd& x) {
  if (g.Wc.rows() != x.size() || g.Wo.rows() != x.size()) {
    throw InputError("linear_energies: state dimension does not match the gramians");
  }
  require_finite(x, "state");
  LinearEnergies e;
  e.observability = 0.5 * x.dot(g.Wo * x);
  if (x.isZero(0.0)) return e;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g.Wc);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double scale = g.Wc.diagonal().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-14 * scale)) {
    throw SingularityError(
        "controllability gramian is singular; use a regularized inverse (e.g. the kernel "
        "estimator with lambda > 0)");
  }
  e.controllability = 0.5 * x.dot(ldlt.solve(x));
  return e;
}

LinearGramians empirical_linear_gramians(const SampleEnsemble& controllability,
                                         const SampleEnsemble& observability,
                                         const SimulationGrid& grid) {
  grid.validate();
  auto check = [&](const SampleEnsemble& e, const char* what) {
    if (e.channels < 1 || e.size() != grid.steps * e.channels) {
      throw InputError(std::string(what) + " ensemble has " + std::to_string(e.size()) +
                       " points, which is not N * channels for N = " + std::to_string(grid.steps));
    }
  };
  check(controllability, "controllability");
  check(observability, "observability");
  if (controllability.dim() != observability.dim()) {
    throw InputError("ensembles differ in state dimension");
  }
  LinearGramians g;
  g.Wc = (grid.horizon / static_cast<double>(controllability.size())) *
         (controllability.points.transpose() * controllability.points);
  g.Wo = (grid.horizon / static_cast<double>(observability.size())) *
         (observability.points.transpose() * observability.points);
  g.Wc = 0.5 * (g.Wc + g.Wc.transpose());
  g.Wo = 0.5 * (g.Wo + g.Wo.transpose());
  return g;
}

OuStationaryDensity::OuStationaryDensity(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (B.rows() != A.rows()) throw InputError("A and B differ in row count");
  wc_ = solve_lyapunov(A, B * B.transpose());
  llt_.compute(wc_);
  const double scale = wc_.diagonal().maxCoeff();
  if (llt_.info() != Eigen::Success ||
      !(llt_.matrixL().toDenseMatrix().diagonal().minCoeff() > 1e-7 * std::sqrt(scale))) {
    throw SingularityError("(A, B) is not controllable: the stationary covariance is singular");
  }
  const Eigen::Index n = wc_.rows();
  const double log_det = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  log_z_ = 0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det);
}

double OuStationaryDensity::energy(const Eigen::VectorXd& x) const {
  if (x.size() != wc_.rows()) throw InputError("state dimension does not match the system");
  const Eigen::VectorXd y = llt_.matrixL().solve(x);
  return 0.5 * y.squaredNorm();
}

double OuStationaryDensity::operator()(const Eigen::VectorXd& x) const {
  return std::exp(log_density(x));
}

double ou_stationary_density(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::VectorXd& x) {
  return OuStationaryDensity(A, B)(x);
}

std::string to_json(const LinearGramians& g) {
  nlohmann::json j;
  j["schema"] = "kgram.linear_gramians";
  j["schema_version"] = 1;
  j["Wc"] = matrix_json(g.Wc);
  j["Wo"] = matrix_json(g.Wo);
  return j.dump(2);
}

LinearGramians linear_gramians_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema") != "kgram.linear_gramians" || j.at("schema_version") != 1) {
      throw InputError("not a version-1 linear gramian document");
    }
    return {json_matrix(j.at("Wc")), json_matrix(j.at("Wo"))};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed gramian JSON: ") + e.what());
  }
}

}  // namespace kgram
