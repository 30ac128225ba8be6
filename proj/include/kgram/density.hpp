#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgram/estimators.hpp"
#include "kgram/io.hpp"

namespace kgram {

/// Axis-aligned box plus its quadrature nodes.
///
/// For dimension <= 3 the nodes form a tensor grid with `resolution` points per
/// axis (first axis fastest) and trapezoidal weights. Above that, `resolution`
/// uniform Monte Carlo nodes are drawn from `seed`, each weighted volume/count.
struct EvaluationDomain {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  long resolution = 2;
  std::uint64_t seed = 0;

  EvaluationDomain() = default;
  EvaluationDomain(Eigen::VectorXd lo, Eigen::VectorXd hi, long resolution, std::uint64_t seed = 0);
  static EvaluationDomain interval(double lo, double hi, long resolution);
  static EvaluationDomain box(double lo, double hi, int dim, long resolution);

  void validate() const;
  Eigen::Index dim() const { return lo.size(); }
  bool is_tensor_grid() const { return dim() <= 3; }
  Eigen::Index node_count() const;
  double volume() const;
  // One node per row.
  PointSet nodes() const;
  Eigen::VectorXd weights() const;
  // Per-axis node coordinates (tensor grids only).
  Eigen::VectorXd axis(Eigen::Index d) const;
};

/// Normalized exp(-Lc) over an evaluation domain.
class DensityEstimate {
 public:
  DensityEstimate(std::shared_ptr<const EnergyModel> model, EvaluationDomain domain, double z,
                  Eigen::VectorXd node_energy);

  const EnergyModel& model() const { return *model_; }
  const EvaluationDomain& domain() const { return domain_; }
  double normalizer() const { return z_; }
  // exp(-Lc(x)) / Z.
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  const Eigen::VectorXd& node_energy() const { return energy_; }
  Eigen::VectorXd node_density() const;
  // sum of weight * density over the nodes; 1 up to round-off.
  double node_mass() const;

 private:
  std::shared_ptr<const EnergyModel> model_;
  EvaluationDomain domain_;
  double z_;
  Eigen::VectorXd energy_;
};

// Z by quadrature of exp(-Lc) over the domain. Throws DomainError when Z
// underflows (below 1e-300); enlarge the box or lower lambda.
DensityEstimate estimate_density(std::shared_ptr<const EnergyModel> model,
                                 const EvaluationDomain& domain);
DensityEstimate estimate_density(const EnergyModel& model, const EvaluationDomain& domain);

struct LevelSet {
  double threshold = 0.0;
  // Energy at every domain node and membership flag per node.
  Eigen::VectorXd values;
  std::vector<std::uint8_t> members;
  // Non-empty when the set is empty (a valid but suspicious outcome).
  std::string warning;

  Eigen::Index count() const;
  bool empty() const { return count() == 0; }
  std::vector<Eigen::Index> indices() const;
  // True when every member of this set is also a member of `other`.
  bool subset_of(const LevelSet& other) const;
};

// {x : values(x) <= tau} and {x : values(x) >= tau}.
LevelSet sublevel_set(const Eigen::VectorXd& values, double tau);
LevelSet superlevel_set(const Eigen::VectorXd& values, double tau);

// {grid x : Lc(x) <= tau}, tau > 0.
LevelSet reachable_set(const EnergyModel& model, double tau, const EvaluationDomain& domain);
// {grid x : Lo(x) >= tau'}, tau' >= 0.
LevelSet observable_set(const EnergyModel& model, double tau_prime, const EvaluationDomain& domain);

struct SupportEstimate {
  double tau = 0.0;
  double requested_mass = 0.0;
  double captured_mass = 0.0;
  LevelSet set;
};

// Smallest tau whose sublevel set {Lc <= tau} carries at least `mass` of the
// normalized node mass.
SupportEstimate support_estimate(const DensityEstimate& density, double mass);

// Face-connected components of the member nodes of a tensor grid.
int count_components(const EvaluationDomain& domain, const std::vector<std::uint8_t>& members);

// Strict local maxima (v[i-1] < v[i] >= v[i+1]) of node values on a 1-D grid,
// excluding the two end nodes.
std::vector<Eigen::Index> local_maxima_1d(const Eigen::VectorXd& values);

// sum over nodes of weight * |rho_hat - truth|.
double l1_distance(const DensityEstimate& density,
                   const std::function<double(const Eigen::VectorXd&)>& truth);

// Columns x1..xn, Lc, density[, in_support].
void write_density_csv(std::ostream& os, const DensityEstimate& density,
                       const LevelSet* support = nullptr, const HeaderFields& extra = {});
// Columns x1..xn, value, member.
void write_level_set_csv(std::ostream& os, const EvaluationDomain& domain, const LevelSet& set,
                         const HeaderFields& extra = {});

}  // namespace kgram
