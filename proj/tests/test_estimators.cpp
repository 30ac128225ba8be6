#include <cmath>

#include <doctest.h>

#include "kgram/errors.hpp"
#include "kgram/estimators.hpp"
#include "kgram/matrix_free.hpp"
#include "kgram/systems.hpp"
#include "test_util.hpp"

using namespace kgram;

namespace {

// Explicit feature map of (1 + x.y)^2 on R^2: 6 monomials.
Eigen::VectorXd quad_features(const Eigen::Vector2d& x) {
  const double r2 = std::sqrt(2.0);
  Eigen::VectorXd f(6);
  f << 1.0, r2 * x(0), r2 * x(1), x(0) * x(0), x(1) * x(1), r2 * x(0) * x(1);
  return f;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& features) {
  return features.transpose() * features / static_cast<double>(features.rows());
}

// 1/2 f^T W (W + lambda)^-2 f.
double lc_oracle(const Eigen::MatrixXd& W, double lambda, const Eigen::VectorXd& f) {
  const Eigen::MatrixXd R = (W + lambda * Eigen::MatrixXd::Identity(W.rows(), W.cols())).inverse();
  return 0.5 * f.dot(R * W * R * f);
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("fit_controllability spectra") {
    const EnergyModel one = fit_controllability(test::ensemble_of(Eigen::RowVector2d(0.3, 0.1)),
                                                KernelSpec::gaussian(1.0), 0.1);
    REQUIRE(one.eigenvalues().size() == 1);
    CHECK(one.eigenvalues()(0) == doctest::Approx(1.0));

    PointSet dup(2, 2);
    dup << 0.4, -0.2, 0.4, -0.2;
    const EnergyModel two = fit_controllability(test::ensemble_of(dup), KernelSpec::laplacian(0.5), 0.1);
    Eigen::VectorXd ev = two.eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size());
    CHECK(std::abs(ev(0)) <= 1e-15);
    CHECK(ev(1) == doctest::Approx(1.0));

    std::mt19937_64 rng(21);
    const PointSet x = test::gaussian_matrix(rng, 80, 3);
    const KernelSpec k = KernelSpec::gaussian(1.1);
    const EnergyModel model = fit_controllability(test::ensemble_of(x), k, 0.05);
    CHECK(model.eigenvalues().minCoeff() >= 0.0);
    CHECK(model.eigenvalues().maxCoeff() <= k.kappa_squared() + 1e-12);
    const Eigen::MatrixXd K = kernel_matrix(k, x);
    const Eigen::MatrixXd V = model.eigenvectors();
    const Eigen::MatrixXd rec = V * model.eigenvalues().asDiagonal() * V.transpose();
    CHECK((rec - K / 80.0).norm() <= 1e-8 * K.norm());
  }

  TEST_CASE("fit errors") {
    const SampleEnsemble ens = test::ensemble_of(Eigen::MatrixXd::Ones(3, 2));
    CHECK_THROWS_AS(fit_controllability(ens, KernelSpec::linear(), 0.0), ParameterError);
    CHECK_THROWS_AS(fit_controllability(ens, KernelSpec::linear(), -1.0), ParameterError);
    CHECK_THROWS_AS(fit_controllability(test::ensemble_of(PointSet(0, 2)), KernelSpec::linear(), 1.0), InputError);
    const EnergyModel m = fit_controllability(ens, KernelSpec::linear(), 1.0);
    CHECK_THROWS_AS(eval_Lc(m, Eigen::Vector3d::Zero()), InputError);
    CHECK_THROWS_AS(eval_Lo(m, Eigen::Vector2d::Zero()), InputError);
  }

  TEST_CASE("eval_Lc: orthogonal probe gives zero") {
    PointSet x(3, 3);
    x << 1, 0, 0, 2, 0, 0, -1, 0, 0;
    const EnergyModel m = fit_controllability(test::ensemble_of(x), KernelSpec::linear(), 0.3);
    CHECK(eval_Lc(m, Eigen::Vector3d(0, 1, -2)) == 0.0);
  }

  TEST_CASE("eval_Lc: linear kernel vs state-space formula") {
    std::mt19937_64 rng(22);
    for (long m : {5, 60, 400}) {
      const PointSet x = test::gaussian_matrix(rng, m, 3, 0.7);
      const double lambda = 0.02;
      const EnergyModel model = fit_controllability(test::ensemble_of(x), KernelSpec::linear(), lambda);
      const Eigen::MatrixXd W = covariance(x);
      for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd p = test::gaussian_matrix(rng, 3, 1);
        CHECK(eval_Lc(model, p) == doctest::Approx(lc_oracle(W, lambda, p)).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("eval_Lc: quadratic kernel vs 6-dimensional feature map") {
    std::mt19937_64 rng(23);
    const PointSet x = test::gaussian_matrix(rng, 150, 2, 0.8);
    Eigen::MatrixXd F(150, 6);
    for (Eigen::Index i = 0; i < 150; ++i) F.row(i) = quad_features(x.row(i).transpose()).transpose();
    const double lambda = 0.1;
    const EnergyModel model = fit_controllability(test::ensemble_of(x), KernelSpec::polynomial(2), lambda);
    const Eigen::MatrixXd W = covariance(F);
    for (int k = 0; k < 30; ++k) {
      const Eigen::Vector2d p = test::gaussian_matrix(rng, 2, 1);
      CHECK(eval_Lc(model, p) == doctest::Approx(lc_oracle(W, lambda, quad_features(p))).epsilon(1e-8));
    }
  }

  TEST_CASE("eval_Lc: centered linear kernel vs centered covariance") {
    std::mt19937_64 rng(24);
    PointSet x = test::gaussian_matrix(rng, 90, 2, 0.6);
    x.rowwise() += Eigen::RowVector2d(1.5, -0.7);
    const double lambda = 0.05;
    const EnergyModel model =
        fit_controllability(test::ensemble_of(x), KernelSpec::linear(), lambda, {GramianScaling::kOneOverM, true});
    CHECK(model.centered());
    const Eigen::RowVector2d mean = x.colwise().mean();
    const PointSet xc = x.rowwise() - mean;
    const Eigen::MatrixXd W = covariance(xc);
    for (int k = 0; k < 20; ++k) {
      const Eigen::Vector2d p = test::gaussian_matrix(rng, 2, 1);
      const Eigen::Vector2d pc = p - mean.transpose();
      CHECK(eval_Lc(model, p) == doctest::Approx(lc_oracle(W, lambda, pc)).epsilon(1e-8));
    }
  }

  TEST_CASE("Riemann scaling equals rescaled lambda") {
    const ControlSystem sys = make_builtin_system("linear2d");
    const SimulationGrid grid(6.0, 300);
    const SampleEnsemble ens = impulse_responses(sys, grid);
    const KernelSpec k = KernelSpec::gaussian(0.3);
    const double lambda = 0.02, T = grid.horizon;
    const EnergyModel riemann = fit_controllability(ens, k, lambda, {GramianScaling::kRiemannTOverM, false});
    const EnergyModel plain = fit_controllability(ens, k, lambda / T);
    CHECK(riemann.scale_factor() == T);
    for (const Eigen::Vector2d p : {Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(-0.05, 0.4)}) {
      CHECK(eval_Lc(riemann, p) == doctest::Approx(eval_Lc(plain, p) / T).epsilon(1e-9));
    }
  }

  TEST_CASE("eval_Lo") {
    PointSet x(2, 2);
    x << 1, 0, -3, 0;
    const EnergyModel lin = fit_observability(test::ensemble_of(x), KernelSpec::linear());
    CHECK(eval_Lo(lin, Eigen::Vector2d(0, 5)) == 0.0);

    std::mt19937_64 rng(25);
    const PointSet d = test::gaussian_matrix(rng, 70, 3);
    const EnergyModel mo = fit_observability(test::ensemble_of(d), KernelSpec::linear());
    const Eigen::MatrixXd W = covariance(d);
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd p = test::gaussian_matrix(rng, 3, 1);
      CHECK(eval_Lo(mo, p) == doctest::Approx(0.5 * p.dot(W * p)).epsilon(1e-10));
    }

    const Eigen::RowVector3d d1(0.2, -1.0, 0.4);
    const EnergyModel single = fit_observability(test::ensemble_of(d1), KernelSpec::gaussian(0.9));
    CHECK(eval_Lo(single, d1.transpose()) == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("batch evaluation matches pointwise") {
    std::mt19937_64 rng(26);
    const PointSet x = test::gaussian_matrix(rng, 120, 2);
    const PointSet probes = test::gaussian_matrix(rng, 700, 2);
    const EnergyModel mc = fit_controllability(test::ensemble_of(x), KernelSpec::laplacian(0.8), 0.1);
    const EnergyModel mo = fit_observability(test::ensemble_of(x), KernelSpec::laplacian(0.8));
    const Eigen::VectorXd lc = eval_Lc_batch(mc, probes);
    const Eigen::VectorXd lo = eval_Lo_batch(mo, probes);
    for (Eigen::Index i = 0; i < probes.rows(); i += 17) {
      CHECK(lc(i) == doctest::Approx(eval_Lc(mc, probes.row(i).transpose())).epsilon(1e-12));
      CHECK(lo(i) == doctest::Approx(eval_Lo(mo, probes.row(i).transpose())).epsilon(1e-12));
    }
  }

  TEST_CASE("consistency_bound") {
    const double delta = 2.0 / std::exp(1.0);
    CHECK(consistency_bound(1.0, 1.0, 4, delta) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(consistency_bound(1.0, 1.0, 16, delta) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    const double direct = 2.0 * std::sqrt(2.0) * (0.25 + 1.0) / (0.0625 * 10.0) * std::sqrt(std::log(40.0));
    CHECK(consistency_bound(1.0, 0.5, 100, 0.05) == doctest::Approx(direct).epsilon(1e-14));
    double last = INFINITY;
    for (double lambda : {0.05, 0.1, 0.3, 1.0, 3.0}) {
      const double b = consistency_bound(1.0, lambda, 100, 0.05);
      CHECK(b < last);
      last = b;
    }
    CHECK_THROWS_AS(consistency_bound(1.0, 1.0, 4, 0.0), ParameterError);
    CHECK_THROWS_AS(consistency_bound(1.0, 1.0, 4, 1.5), ParameterError);
    CHECK_THROWS_AS(consistency_bound(1.0, 0.0, 4, 0.5), ParameterError);
  }

  TEST_CASE("hs_covariance_bound") {
    CHECK(hs_covariance_bound(1.0, 8, 2.0 / std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hs_covariance_bound(1.0, 400, 0.05) == doctest::Approx(0.5 * hs_covariance_bound(1.0, 100, 0.05)));
    CHECK(hs_covariance_bound(1.0, 10000, 0.1) ==
          doctest::Approx(2.0 * std::sqrt(2.0) / 100.0 * std::sqrt(std::log(20.0))).epsilon(1e-14));
    CHECK_THROWS_AS(hs_covariance_bound(1.0, 8, -0.1), ParameterError);
  }

  TEST_CASE("hs_distance") {
    std::mt19937_64 rng(27);
    const PointSet a = test::gaussian_matrix(rng, 40, 2);
    const PointSet b = test::gaussian_matrix(rng, 55, 2, 1.5);
    CHECK(hs_distance(a, a, KernelSpec::gaussian(1.0)) <= 1e-7);

    const PointSet far_a = Eigen::RowVector2d(0, 0), far_b = Eigen::RowVector2d(10, 10);
    CHECK(hs_distance(far_a, far_b, KernelSpec::gaussian(0.1)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    const double explicit_fro = (covariance(a) - covariance(b)).norm();
    CHECK(hs_distance(a, b, KernelSpec::linear()) == doctest::Approx(explicit_fro).epsilon(1e-8));
    CHECK(hs_distance(test::ensemble_of(a), test::ensemble_of(b), KernelSpec::linear()) ==
          doctest::Approx(explicit_fro).epsilon(1e-8));
    CHECK_THROWS_AS(hs_distance(PointSet(0, 2), b, KernelSpec::linear()), InputError);
  }

  TEST_CASE("lambda_schedule") {
    CHECK(lambda_schedule(55) == doctest::Approx(1.0 / std::sqrt(std::log(55.0))).epsilon(1e-15));
    CHECK(lambda_schedule(55) == doctest::Approx(0.4999).epsilon(1e-3));
    CHECK(lambda_schedule(3) == doctest::Approx(0.954).epsilon(1e-3));
    CHECK(lambda_schedule(1000) < lambda_schedule(100));
    CHECK_THROWS_AS(lambda_schedule(1), ParameterError);
  }

  TEST_CASE("matrix-free solve agrees with the spectral estimator") {
    std::mt19937_64 rng(28);
    const PointSet probes = test::gaussian_matrix(rng, 25, 1, 0.8);
    const PointSet x1 = test::gaussian_matrix(rng, 600, 1, 0.7);
    for (const KernelSpec& k : {KernelSpec::laplacian(1.0), KernelSpec::exponential_l1(0.4), KernelSpec::gaussian(0.5)}) {
      const EnergyModel model = fit_controllability(test::ensemble_of(x1), k, 0.2);
      const Eigen::VectorXd dense = eval_Lc_batch(model, probes);
      const Eigen::VectorXd free = eval_Lc_matrix_free(x1, k, 0.2, probes);
      CHECK((dense - free).cwiseAbs().maxCoeff() <= 1e-9 * dense.cwiseAbs().maxCoeff());
    }
    // Two-dimensional samples go through the stored or streamed gram matrix.
    const PointSet x2 = test::gaussian_matrix(rng, 300, 2);
    const PointSet p2 = test::gaussian_matrix(rng, 10, 2);
    const EnergyModel m2 = fit_controllability(test::ensemble_of(x2), KernelSpec::laplacian(1.0), 0.2);
    const auto streamed = make_kernel_operator(KernelSpec::laplacian(1.0), x2, 10);
    const auto stored = make_kernel_operator(KernelSpec::laplacian(1.0), x2);
    Eigen::MatrixXd in = test::gaussian_matrix(rng, 300, 3), o1(300, 3), o2(300, 3);
    streamed->apply(in, o1);
    stored->apply(in, o2);
    CHECK((o1 - o2).norm() <= 1e-12 * o2.norm());
    CHECK((eval_Lc_batch(m2, p2) - eval_Lc_matrix_free(x2, KernelSpec::laplacian(1.0), 0.2, p2)).cwiseAbs().maxCoeff() <=
          1e-9);
  }

  TEST_CASE("nested consistency study") {
    const ControlSystem ou = make_builtin_system("scalar_ou");
    const SampleEnsemble pool = sde_trajectories(ou, SimulationGrid(6.0, 600), 1600, 6.0, 31);
    const PointSet probes = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
    const ConsistencyReport rep =
        nested_consistency_study(pool.points, KernelSpec::laplacian(1.0), 0.3, {25, 100}, 16, probes, 0.05);
    REQUIRE(rep.median_deviations.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
      CHECK(rep.bounds[i] > 0.0);
      CHECK(std::isfinite(rep.bounds[i]));
      CHECK(rep.max_deviations[i] >= rep.median_deviations[i]);
      CHECK(rep.max_deviations[i] <= rep.bounds[i]);
    }
    CHECK(rep.bounds[0] == doctest::Approx(2.0 * rep.bounds[1]));
    CHECK(std::isfinite(rep.fitted_slope));
    CHECK_THROWS_AS(
        nested_consistency_study(pool.points, KernelSpec::laplacian(1.0), 0.3, {25, 200}, 16, probes, 0.05),
        InputError);
    CHECK_THROWS_AS(nested_consistency_study(pool.points, KernelSpec::linear(), 0.3, {25, 50}, 16, probes, 0.05),
                    ParameterError);
  }
}
