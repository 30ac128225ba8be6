#include <cmath>

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "kgram/errors.hpp"
#include "kgram/linear_oracle.hpp"
#include "kgram/systems.hpp"
#include "test_util.hpp"

using namespace kgram;

namespace {

const Eigen::MatrixXd kA2 = (Eigen::MatrixXd(2, 2) << 0, 1, -2, -3).finished();
const Eigen::MatrixXd kB2 = (Eigen::MatrixXd(2, 1) << 0, 1).finished();
const Eigen::MatrixXd kC2 = (Eigen::MatrixXd(1, 2) << 1, 0).finished();

// Composite Simpson quadrature of int_0^T exp(At) Q exp(A^T t) dt.
Eigen::MatrixXd simpson_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q, double T, long nodes) {
  const long intervals = nodes % 2 == 0 ? nodes : nodes - 1;
  const double h = T / static_cast<double>(intervals);
  const Eigen::MatrixXd step = (A * h).exp();
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  for (long k = 0; k <= intervals; ++k) {
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * E * Q * E.transpose();
    E = step * E;
  }
  return acc * h / 3.0;
}

// Right-endpoint sum dt * sum_{i=1..N} exp(A t_i) Q exp(A^T t_i).
Eigen::MatrixXd riemann_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q, double T, long N) {
  const double dt = T / static_cast<double>(N);
  const Eigen::MatrixXd step = (A * dt).exp();
  Eigen::MatrixXd E = step;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  for (long i = 1; i <= N; ++i) {
    acc += E * Q * E.transpose();
    E = step * E;
  }
  return acc * dt;
}

}  // namespace

TEST_SUITE("linear_oracle") {
  TEST_CASE("solve_lyapunov closed forms") {
    CHECK(solve_lyapunov(Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Ones(1, 1))(0, 0) ==
          doctest::Approx(0.5).epsilon(1e-15));
    const Eigen::MatrixXd W = solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
    CHECK((W - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-15);
  }

  TEST_CASE("solve_lyapunov matches quadrature") {
    const Eigen::MatrixXd Q = kB2 * kB2.transpose();
    const Eigen::MatrixXd W = solve_lyapunov(kA2, Q);
    const Eigen::MatrixXd ref = simpson_gramian(kA2, Q, 40.0, 100000);
    CHECK((W - ref).norm() <= 1e-10 * ref.norm());
    // Known closed form for this pair.
    CHECK(W(0, 0) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
    CHECK(W(1, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
    CHECK(std::abs(W(0, 1)) <= 1e-14);
  }

  TEST_CASE("solve_lyapunov errors") {
    const Eigen::MatrixXd unstable = (Eigen::MatrixXd(2, 2) << 0.5, 0, 0, -1).finished();
    try {
      solve_lyapunov(unstable, Eigen::MatrixXd::Identity(2, 2));
      FAIL("expected SpectrumError");
    } catch (const SpectrumError& e) {
      CHECK(std::string(e.what()).find("0.5") != std::string::npos);
    }
    CHECK_THROWS_AS(solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), (Eigen::MatrixXd(2, 2) << 1, 1, 0, 1).finished()),
                    InputError);
    CHECK_THROWS_AS(solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), -Eigen::MatrixXd::Identity(2, 2)), InputError);
  }

  TEST_CASE("linear gramians") {
    const LinearGramians g = linear_gramians(kA2, kB2, kC2);
    CHECK((g.Wc - g.Wc.transpose()).norm() <= 1e-12);
    CHECK((kA2 * g.Wc + g.Wc * kA2.transpose() + kB2 * kB2.transpose()).norm() <= 1e-8);
    CHECK((kA2.transpose() * g.Wo + g.Wo * kA2 + kC2.transpose() * kC2).norm() <= 1e-8);
  }

  TEST_CASE("linear energies") {
    LinearGramians g{0.5 * Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    const LinearEnergies zero = linear_energies(g, Eigen::Vector2d::Zero());
    CHECK(zero.controllability == 0.0);
    CHECK(zero.observability == 0.0);
    CHECK(linear_energies(g, Eigen::Vector2d(1, 0)).controllability == doctest::Approx(1.0));

    std::mt19937_64 rng(11);
    const Eigen::MatrixXd G = test::gaussian_matrix(rng, 3, 3);
    LinearGramians r{G * G.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3), G.transpose() * G};
    const Eigen::VectorXd x = test::gaussian_matrix(rng, 3, 1);
    const LinearEnergies e1 = linear_energies(r, x);
    const LinearEnergies e2 = linear_energies(r, 2.0 * x);
    CHECK(e2.controllability == doctest::Approx(4.0 * e1.controllability).epsilon(1e-14));
    CHECK(e2.observability == doctest::Approx(4.0 * e1.observability).epsilon(1e-14));
    CHECK(e1.controllability > 0.0);

    LinearGramians singular{Eigen::Vector2d(1.0, 0.0).asDiagonal(), Eigen::MatrixXd::Identity(2, 2)};
    CHECK_THROWS_AS(linear_energies(singular, Eigen::Vector2d(1, 1)), SingularityError);
  }

  TEST_CASE("empirical gramians: scalar") {
    const ControlSystem sys = make_builtin_system("scalar_ou");
    const SimulationGrid grid(10.0, 2000);
    const LinearGramians g = empirical_linear_gramians(impulse_responses(sys, grid), release_responses(sys, grid), grid);
    CHECK(std::abs(g.Wc(0, 0) - 0.5) <= 0.005 * 0.5);
    CHECK(std::abs(g.Wo(0, 0) - 0.5) <= 0.005 * 0.5);
  }

  TEST_CASE("empirical gramians: zero ensembles and size checks") {
    const SimulationGrid grid(1.0, 10);
    const SampleEnsemble c = test::ensemble_of(Eigen::MatrixXd::Zero(10, 2), EnsembleKind::kControllability);
    SampleEnsemble cc = c;
    cc.channels = 1;
    SampleEnsemble oo = test::ensemble_of(Eigen::MatrixXd::Zero(20, 2), EnsembleKind::kObservability);
    oo.channels = 2;
    const LinearGramians g = empirical_linear_gramians(cc, oo, grid);
    CHECK(g.Wc.isZero(0.0));
    CHECK(g.Wo.isZero(0.0));
    SampleEnsemble bad = cc;
    bad.points = Eigen::MatrixXd::Zero(9, 2);
    CHECK_THROWS_AS(empirical_linear_gramians(bad, oo, grid), InputError);
  }

  TEST_CASE("empirical gramians: two-state system against the discrete sum") {
    // The estimator is the right-endpoint Riemann sum of the gramian integral,
    // so its exact target at finite step is the discrete sum, not the integral.
    const ControlSystem sys = make_builtin_system("linear2d");
    const SimulationGrid grid(40.0, 4000);
    const LinearGramians g = empirical_linear_gramians(impulse_responses(sys, grid), release_responses(sys, grid), grid);
    const Eigen::MatrixXd wc_sum = riemann_gramian(kA2, kB2 * kB2.transpose(), 40.0, 4000);
    const Eigen::MatrixXd wo_sum = riemann_gramian(kA2.transpose(), kC2.transpose() * kC2, 40.0, 4000);
    CHECK((g.Wc - wc_sum).norm() <= 1e-8 * wc_sum.norm());
    CHECK((g.Wo - wo_sum).norm() <= 1e-8 * wo_sum.norm());
    // ... which sits O(dt) away from the Lyapunov solution.
    const LinearGramians exact = linear_gramians(kA2, kB2, kC2);
    const double rel = (g.Wc - exact.Wc).norm() / exact.Wc.norm();
    CHECK(rel < 0.03);
  }

  TEST_CASE("empirical gramian error does not grow as T doubles at fixed dt") {
    const ControlSystem sys = make_builtin_system("linear2d");
    const LinearGramians exact = linear_gramians(kA2, kB2, kC2);
    double last = INFINITY;
    for (double T : {1.25, 2.5, 5.0, 10.0, 20.0, 40.0}) {
      const SimulationGrid grid(T, std::lround(T / 0.01));
      const LinearGramians g = empirical_linear_gramians(impulse_responses(sys, grid), release_responses(sys, grid), grid);
      const double err = (g.Wc - exact.Wc).norm() / exact.Wc.norm();
      CHECK(err <= last * (1.0 + 1e-9));
      last = err;
    }
  }

  TEST_CASE("OU stationary density") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, -1.0);
    CHECK(ou_stationary_density(a, Eigen::MatrixXd::Constant(1, 1, std::sqrt(2.0)), Eigen::VectorXd::Zero(1)) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
    CHECK(ou_stationary_density(a, Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)) ==
          doctest::Approx(1.0 / std::sqrt(M_PI)).epsilon(1e-14));

    const OuStationaryDensity rho(kA2, kB2);
    std::mt19937_64 rng(12);
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd x = test::gaussian_matrix(rng, 2, 1, 0.4);
      CHECK(rho(x) == rho(-x));
    }
    // Integrates to one on a +-6 sigma grid (trapezoid, 401^2 nodes).
    const int n = 401;
    const double hx = 12.0 * std::sqrt(1.0 / 12.0) / (n - 1), hy = 12.0 * std::sqrt(1.0 / 6.0) / (n - 1);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double w = (i == 0 || i == n - 1 ? 0.5 : 1.0) * (j == 0 || j == n - 1 ? 0.5 : 1.0);
        mass += w * rho(Eigen::Vector2d(-6.0 * std::sqrt(1.0 / 12.0) + i * hx, -6.0 * std::sqrt(1.0 / 6.0) + j * hy));
      }
    }
    CHECK(std::abs(mass * hx * hy - 1.0) <= 0.01);

    // (A, B) not controllable: W_c singular.
    CHECK_THROWS_AS(OuStationaryDensity(-Eigen::MatrixXd::Identity(2, 2), (Eigen::MatrixXd(2, 1) << 1, 0).finished()),
                    SingularityError);
  }

  TEST_CASE("gramians JSON round trip") {
    const LinearGramians g = linear_gramians(kA2, kB2, kC2);
    const LinearGramians back = linear_gramians_from_json(to_json(g));
    CHECK(back.Wc == g.Wc);
    CHECK(back.Wo == g.Wo);
    CHECK(to_json(g).find("kgram.linear_gramians") != std::string::npos);
    CHECK_THROWS(linear_gramians_from_json("{\"schema\": \"other\"}"));
  }
}
