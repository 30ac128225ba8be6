#include "kgram/systems.hpp"

#include <cmath>
#include <memory>

#include "kgram/errors.hpp"
#include "kgram/linear_oracle.hpp"

namespace kgram {

namespace {

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known, const std::string& system) {
  for (const auto& [k, v] : params) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw InputError("system '" + system + "' has no parameter '" + k + "'");
  }
}

Eigen::MatrixXd linear2d_A() { return (Eigen::MatrixXd(2, 2) << 0, 1, -2, -3).finished(); }

}  // namespace

std::vector<std::string> builtin_system_names() {
  return {"linear2d", "scalar_ou", "double_well", "vanderpol_stabilized"};
}

ControlSystem make_builtin_system(const std::string& name,
                                  const std::map<std::string, double>& params) {
  if (name == "linear2d") {
    reject_unknown(params, {}, name);
    return ControlSystem::linear(name, linear2d_A(), (Eigen::MatrixXd(2, 1) << 0, 1).finished(),
                                 (Eigen::MatrixXd(1, 2) << 1, 0).finished());
  }
  if (name == "scalar_ou") {
    reject_unknown(params, {"a", "b"}, name);
    const double a = param(params, "a", 1.0);
    const double b = param(params, "b", 1.0);
    return ControlSystem::linear(name, Eigen::MatrixXd::Constant(1, 1, -a),
                                 Eigen::MatrixXd::Constant(1, 1, b), Eigen::MatrixXd::Identity(1, 1));
  }
  if (name == "double_well") {
    reject_unknown(params, {"sigma"}, name);
    const double sigma = param(params, "sigma", 0.7);
    return ControlSystem(
        name, 1, 1, 1,
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          return Eigen::VectorXd::Constant(1, x(0) - x(0) * x(0) * x(0));
        },
        [sigma](const Eigen::VectorXd&) -> Eigen::MatrixXd {
          return Eigen::MatrixXd::Constant(1, 1, sigma);
        },
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; });
  }
  if (name == "vanderpol_stabilized") {
    reject_unknown(params, {"mu", "g"}, name);
    const double mu = param(params, "mu", 1.0);
    const double g = param(params, "g", 0.3);
    return ControlSystem(
        name, 2, 1, 1,
        [mu](const Eigen::VectorXd& x) -> Eigen::VectorXd {
          Eigen::VectorXd d(2);
          d << x(1), -x(0) - mu * (1.0 - x(0) * x(0)) * x(1);
          return d;
        },
        [g](const Eigen::VectorXd&) -> Eigen::MatrixXd {
          return (Eigen::MatrixXd(2, 1) << 0.0, g).finished();
        },
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x.head(1); });
  }
  throw InputError("unknown builtin system '" + name + "'");
}

std::function<double(const Eigen::VectorXd&)> builtin_stationary_density(
    const std::string& name, const std::map<std::string, double>& params) {
  if (name == "linear2d" || name == "scalar_ou") {
    const ControlSystem sys = make_builtin_system(name, params);
    const auto& L = *sys.linear_form();
    auto dens = std::make_shared<OuStationaryDensity>(L.A, L.B);
    return [dens](const Eigen::VectorXd& x) { return (*dens)(x); };
  }
  if (name == "double_well") {
    const double sigma = param(params, "sigma", 0.7);
    auto unnormalized = [sigma](double x) {
      return std::exp(2.0 * (x * x / 2.0 - x * x * x * x / 4.0) / (sigma * sigma));
    };
    // Composite Simpson on [-4, 4]; the integrand is below 1e-20 outside for sigma <= 1.
    constexpr int kIntervals = 20000;
    const double h = 8.0 / kIntervals;
    double acc = unnormalized(-4.0) + unnormalized(4.0);
    for (int i = 1; i < kIntervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * unnormalized(-4.0 + i * h);
    const double z = acc * h / 3.0;
    return [unnormalized, z](const Eigen::VectorXd& x) { return unnormalized(x(0)) / z; };
  }
  return {};
}

ControlSystem make_polynomial_system(const PolynomialSystemSpec& spec) {
  const int n = spec.n;
  if (n < 1) throw InputError("polynomial system: n must be positive");
  if (static_cast<int>(spec.drift.size()) != n) {
    throw InputError("polynomial system: need one drift row per state");
  }
  for (const auto& row : spec.drift) {
    for (const auto& mono : row) {
      if (static_cast<int>(mono.powers.size()) != n) {
        throw InputError("polynomial system: monomial powers must have length n");
      }
      bool constant = true;
      for (int p : mono.powers) {
        if (p < 0) throw InputError("polynomial system: negative power");
        constant = constant && p == 0;
      }
      if (constant && mono.coef != 0.0) {
        throw InputError("polynomial system: constant drift term violates f(0) = 0");
      }
    }
  }
  if (spec.input.rows() != n || spec.input.cols() < 1) {
    throw InputError("polynomial system: input matrix must be n x q");
  }
  if (spec.output.cols() != n || spec.output.rows() < 1) {
    throw InputError("polynomial system: output matrix must be p x n");
  }
  const auto drift = spec.drift;
  const Eigen::MatrixXd G = spec.input;
  const Eigen::MatrixXd C = spec.output;
  return ControlSystem(
      spec.name, n, static_cast<int>(G.cols()), static_cast<int>(C.rows()),
      [drift](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
        for (size_t i = 0; i < drift.size(); ++i) {
          for (const auto& mono : drift[i]) {
            double term = mono.coef;
            for (size_t k = 0; k < mono.powers.size(); ++k) {
              term *= std::pow(x(static_cast<Eigen::Index>(k)), mono.powers[k]);
            }
            d(static_cast<Eigen::Index>(i)) += term;
          }
        }
        return d;
      },
      [G](const Eigen::VectorXd&) -> Eigen::MatrixXd { return G; },
      [C](const Eigen::VectorXd& x) -> Eigen::VectorXd { return C * x; });
}

}  // namespace kgram
