#include <cmath>
#include <random>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "kgram/density.hpp"
#include "kgram/estimators.hpp"
#include "kgram/kernels.hpp"
#include "kgram/systems.hpp"
#include "test_util.hpp"

using namespace kgram;

namespace {

const KernelSpec kAllKernels[] = {KernelSpec::linear(),         KernelSpec::polynomial(3),
                                  KernelSpec::gaussian(0.8),    KernelSpec::laplacian(1.3),
                                  KernelSpec::exponential_l1(0.6)};

const KernelSpec kBoundedKernels[] = {KernelSpec::gaussian(0.8), KernelSpec::laplacian(1.3),
                                      KernelSpec::exponential_l1(0.6)};

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("kernel matrices are symmetric PSD") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const int dim = 1 + trial % 4;
      const int m = 5 + 2 * trial;
      const PointSet x = test::gaussian_matrix(rng, m, dim);
      for (const KernelSpec& k : kAllKernels) {
        const Eigen::MatrixXd K = kernel_matrix(k, x);
        CHECK(K == K.transpose());
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
        CHECK(ev.minCoeff() >= -1e-8 * std::max(1.0, ev.maxCoeff()));
      }
    }
  }

  TEST_CASE("bounded kernels lie in (0, 1] with unit diagonal") {
    std::mt19937_64 rng(12);
    const PointSet x = test::gaussian_matrix(rng, 40, 3, 0.5);
    for (const KernelSpec& k : kBoundedKernels) {
      const Eigen::MatrixXd K = kernel_matrix(k, x);
      CHECK(K.minCoeff() > 0.0);
      CHECK(K.maxCoeff() <= 1.0);
      CHECK(K.diagonal().isOnes(0.0));
    }
  }

  TEST_CASE("centering is idempotent") {
    std::mt19937_64 rng(13);
    for (const KernelSpec& k : kAllKernels) {
      const Eigen::MatrixXd K = kernel_matrix(k, test::gaussian_matrix(rng, 30, 2));
      const Eigen::MatrixXd once = center_kernel_matrix(K);
      const Eigen::MatrixXd twice = center_kernel_matrix(once);
      CHECK((once - twice).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, K.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("energies are nonnegative and Lc decreases with lambda") {
    std::mt19937_64 rng(14);
    const SampleEnsemble ens = test::ensemble_of(test::gaussian_matrix(rng, 60, 2, 0.7));
    const PointSet probes = test::gaussian_matrix(rng, 50, 2, 1.5);
    for (const KernelSpec& k : kAllKernels) {
      for (const bool center : {false, true}) {
        Eigen::VectorXd previous;
        for (const double lambda : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
          const EnergyModel model = fit_controllability(ens, k, lambda, {GramianScaling::kOneOverM, center});
          const Eigen::VectorXd lc = eval_Lc_batch(model, probes);
          CHECK(lc.minCoeff() >= 0.0);
          if (previous.size() > 0) CHECK((lc.array() <= previous.array() * (1 + 1e-10) + 1e-14).all());
          previous = lc;
        }
      }
      const Eigen::VectorXd lo = eval_Lo_batch(fit_observability(ens, k), probes);
      CHECK(lo.minCoeff() >= 0.0);
    }
  }

  TEST_CASE("nested deviations respect the sample-error bound") {
    // Exact draws from N(0, 1/2), the stationary law of dx = -x dt + dW.
    const KernelSpec k = KernelSpec::gaussian(1.0);
    const double lambda = 0.5;
    const long m = 20;
    const double delta = 0.05;
    const Eigen::VectorXd probe = Eigen::VectorXd::LinSpaced(9, -1.5, 1.5);
    int within = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      std::mt19937_64 rng(1000 + t);
      const PointSet pool = test::gaussian_matrix(rng, 4 * m, 1, std::sqrt(0.5));
      const EnergyModel small = fit_controllability(test::ensemble_of(pool.topRows(m)), k, lambda);
      const EnergyModel large = fit_controllability(test::ensemble_of(pool), k, lambda);
      const double dev = (eval_Lc_batch(small, probe) - eval_Lc_batch(large, probe)).cwiseAbs().maxCoeff();
      if (dev <= consistency_bound(1.0, lambda, m, delta)) ++within;
    }
    CHECK(within >= 0.95 * trials);
  }

  TEST_CASE("covariance operators concentrate") {
    const KernelSpec k = KernelSpec::laplacian(1.0);
    const long m = 100;
    int within = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      std::mt19937_64 rng(2000 + t);
      const PointSet a = test::gaussian_matrix(rng, m, 1, std::sqrt(0.5));
      const PointSet b = test::gaussian_matrix(rng, m, 1, std::sqrt(0.5));
      if (hs_distance(a, b, k) <= 2 * hs_covariance_bound(1.0, m, 0.05)) ++within;
    }
    CHECK(within >= 0.95 * trials);
    CHECK(hs_distance(PointSet(Eigen::MatrixXd::Ones(3, 1)), PointSet(Eigen::MatrixXd::Ones(7, 1)), k) ==
          doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("densities normalize and level sets nest") {
    std::mt19937_64 rng(15);
    const SampleEnsemble ens = test::ensemble_of(test::gaussian_matrix(rng, 200, 2, 0.7));
    for (const KernelSpec& k : {KernelSpec::linear(), KernelSpec::gaussian(0.8), KernelSpec::laplacian(1.0)}) {
      const auto model = std::make_shared<const EnergyModel>(fit_controllability(ens, k, 0.05));
      const EvaluationDomain dom = EvaluationDomain::box(-3, 3, 2, 61);
      const DensityEstimate rho = estimate_density(model, dom);
      CHECK(rho.node_mass() == doctest::Approx(1.0).epsilon(1e-6));
      CHECK((rho.node_density().array() >= 0.0).all());

      LevelSet previous = reachable_set(*model, 1e-3, dom);
      for (const double tau : {0.01, 0.1, 0.5, 1.0, 5.0, 50.0}) {
        const LevelSet s = reachable_set(*model, tau, dom);
        CHECK(previous.subset_of(s));
        previous = s;
      }

      double previous_tau = -1.0;
      for (const double mass : {0.1, 0.5, 0.8, 0.9, 0.99}) {
        const SupportEstimate sup = support_estimate(rho, mass);
        CHECK(sup.captured_mass >= mass - 1e-12);
        CHECK(sup.tau >= previous_tau);
        previous_tau = sup.tau;
      }
    }
  }

  TEST_CASE("simulation is deterministic") {
    const ControlSystem sys = make_builtin_system("double_well");
    const SimulationGrid grid(3.0, 300);
    const SampleEnsemble a = sde_trajectories(sys, grid, 64, 1.0, 99);
    const SampleEnsemble b = sde_trajectories(sys, grid, 64, 1.0, 99);
    const SampleEnsemble c = sde_trajectories(sys, grid, 64, 1.0, 100);
    CHECK(a.points == b.points);
    CHECK(a.content_hash() == b.content_hash());
    CHECK(a.points != c.points);
    // Path k does not depend on how many paths are drawn.
    const SampleEnsemble first = sde_trajectories(sys, grid, 10, 1.0, 99);
    CHECK(first.points == a.points.topRows(10));
  }
}
