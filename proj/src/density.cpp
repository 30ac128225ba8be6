#include "kgram/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "kgram/errors.hpp"

namespace kgram {

namespace {

constexpr double kUnderflow = 1e-300;

}  // namespace

EvaluationDomain::EvaluationDomain(Eigen::VectorXd lo_, Eigen::VectorXd hi_, long resolution_,
                                   std::uint64_t seed_)
    : lo(std::move(lo_)), hi(std::move(hi_)), resolution(resolution_), seed(seed_) {
  validate();
}

EvaluationDomain EvaluationDomain::interval(double lo, double hi, long resolution) {
  return EvaluationDomain(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi),
                          resolution);
}

EvaluationDomain EvaluationDomain::box(double lo, double hi, int dim, long resolution) {
  return EvaluationDomain(Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi),
                          resolution);
}

void EvaluationDomain::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size()) {
    throw DomainError("evaluation domain: lo and hi must be non-empty and of equal length");
  }
  if (!lo.allFinite() || !hi.allFinite() || !(lo.array() < hi.array()).all()) {
    throw DomainError("evaluation domain: need finite lo < hi in every dimension");
  }
  if (resolution < 2) throw DomainError("evaluation domain: resolution must be >= 2");
  if (is_tensor_grid()) {
    double count = 1.0;
    for (Eigen::Index d = 0; d < dim(); ++d) count *= static_cast<double>(resolution);
    if (count > 5e7) throw DomainError("evaluation domain: grid too large");
  }
}

Eigen::Index EvaluationDomain::node_count() const {
  if (!is_tensor_grid()) return resolution;
  Eigen::Index count = 1;
  for (Eigen::Index d = 0; d < dim(); ++d) count *= resolution;
  return count;
}

double EvaluationDomain::volume() const { return (hi - lo).prod(); }

Eigen::VectorXd EvaluationDomain::axis(Eigen::Index d) const {
  if (!is_tensor_grid()) throw DomainError("Monte Carlo domains have no axes");
  return Eigen::VectorXd::LinSpaced(resolution, lo(d), hi(d));
}

PointSet EvaluationDomain::nodes() const {
  validate();
  const Eigen::Index n = dim();
  const Eigen::Index count = node_count();
  PointSet out(count, n);
  if (is_tensor_grid()) {
    std::vector<Eigen::VectorXd> axes;
    for (Eigen::Index d = 0; d < n; ++d) axes.push_back(axis(d));
    for (Eigen::Index idx = 0; idx < count; ++idx) {
      Eigen::Index rest = idx;
      for (Eigen::Index d = 0; d < n; ++d) {
        out(idx, d) = axes[static_cast<size_t>(d)](rest % resolution);
        rest /= resolution;
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index idx = 0; idx < count; ++idx) {
      for (Eigen::Index d = 0; d < n; ++d) out(idx, d) = lo(d) + (hi(d) - lo(d)) * unif(rng);
    }
  }
  return out;
}

Eigen::VectorXd EvaluationDomain::weights() const {
  validate();
  const Eigen::Index count = node_count();
  if (!is_tensor_grid()) {
    return Eigen::VectorXd::Constant(count, volume() / static_cast<double>(count));
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(count);
  for (Eigen::Index idx = 0; idx < count; ++idx) {
    Eigen::Index rest = idx;
    for (Eigen::Index d = 0; d < dim(); ++d) {
      const Eigen::Index i = rest % resolution;
      rest /= resolution;
      const double h = (hi(d) - lo(d)) / static_cast<double>(resolution - 1);
      w(idx) *= (i == 0 || i == resolution - 1) ? 0.5 * h : h;
    }
  }
  return w;
}

DensityEstimate::DensityEstimate(std::shared_ptr<const EnergyModel> model, EvaluationDomain domain,
                                 double z, Eigen::VectorXd node_energy)
    : model_(std::move(model)), domain_(std::move(domain)), z_(z), energy_(std::move(node_energy)) {
  if (!model_ || model_->kind() != EnergyKind::kControllability) {
    throw InputError("density estimate needs a controllability model");
  }
  if (!(z_ > 0.0) || !std::isfinite(z_)) throw DomainError("normalizer Z must be positive and finite");
  if (energy_.size() != domain_.node_count()) {
    throw InputError("node energies do not match the domain");
  }
}

double DensityEstimate::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return std::exp(-eval_Lc(*model_, x)) / z_;
}

Eigen::VectorXd DensityEstimate::node_density() const { return (-energy_.array()).exp() / z_; }

double DensityEstimate::node_mass() const { return domain_.weights().dot(node_density()); }

DensityEstimate estimate_density(std::shared_ptr<const EnergyModel> model,
                                 const EvaluationDomain& domain) {
  if (!model || model->kind() != EnergyKind::kControllability) {
    throw InputError("estimate_density needs a controllability model");
  }
  domain.validate();
  if (domain.dim() != model->dim()) {
    throw DomainError("evaluation domain dimension does not match the model");
  }
  Eigen::VectorXd energy = eval_Lc_batch(*model, domain.nodes());
  const double z = domain.weights().dot((-energy.array()).exp().matrix());
  if (!(z >= kUnderflow)) {
    throw DomainError(
        "normalizing mass underflowed; use a larger box or a smaller lambda");
  }
  return DensityEstimate(std::move(model), domain, z, std::move(energy));
}

DensityEstimate estimate_density(const EnergyModel& model, const EvaluationDomain& domain) {
  return estimate_density(std::make_shared<const EnergyModel>(model), domain);
}

Eigen::Index LevelSet::count() const {
  return static_cast<Eigen::Index>(std::count(members.begin(), members.end(), std::uint8_t{1}));
}

std::vector<Eigen::Index> LevelSet::indices() const {
  std::vector<Eigen::Index> out;
  for (size_t i = 0; i < members.size(); ++i) {
    if (members[i]) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

bool LevelSet::subset_of(const LevelSet& other) const {
  if (members.size() != other.members.size()) return false;
  for (size_t i = 0; i < members.size(); ++i) {
    if (members[i] && !other.members[i]) return false;
  }
  return true;
}

LevelSet sublevel_set(const Eigen::VectorXd& values, double tau) {
  LevelSet s;
  s.threshold = tau;
  s.values = values;
  s.members.resize(static_cast<size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) s.members[static_cast<size_t>(i)] = values(i) <= tau;
  if (s.empty()) s.warning = "sublevel set is empty: threshold lies below every node value";
  return s;
}

LevelSet superlevel_set(const Eigen::VectorXd& values, double tau) {
  LevelSet s;
  s.threshold = tau;
  s.values = values;
  s.members.resize(static_cast<size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) s.members[static_cast<size_t>(i)] = values(i) >= tau;
  if (s.empty()) s.warning = "superlevel set is empty: threshold lies above every node value";
  return s;
}

LevelSet reachable_set(const EnergyModel& model, double tau, const EvaluationDomain& domain) {
  if (!(tau > 0.0)) throw ParameterError("reachable_set: tau must be positive");
  if (domain.dim() != model.dim()) throw DomainError("domain dimension does not match the model");
  return sublevel_set(eval_Lc_batch(model, domain.nodes()), tau);
}

LevelSet observable_set(const EnergyModel& model, double tau_prime, const EvaluationDomain& domain) {
  if (!(tau_prime >= 0.0)) throw ParameterError("observable_set: tau' must be >= 0");
  if (domain.dim() != model.dim()) throw DomainError("domain dimension does not match the model");
  return superlevel_set(eval_Lo_batch(model, domain.nodes()), tau_prime);
}

SupportEstimate support_estimate(const DensityEstimate& density, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw ParameterError("support_estimate: mass must lie in (0, 1)");
  const Eigen::VectorXd& energy = density.node_energy();
  const Eigen::VectorXd cell_mass = density.domain().weights().cwiseProduct(density.node_density());
  std::vector<Eigen::Index> order(static_cast<size_t>(energy.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return energy(a) < energy(b); });
  SupportEstimate out;
  out.requested_mass = mass;
  out.tau = energy(order.back());
  double acc = 0.0;
  for (Eigen::Index idx : order) {
    acc += cell_mass(idx);
    if (acc >= mass) {
      out.tau = energy(idx);
      break;
    }
  }
  out.set = sublevel_set(energy, out.tau);
  out.captured_mass = 0.0;
  for (Eigen::Index idx : out.set.indices()) out.captured_mass += cell_mass(idx);
  return out;
}

int count_components(const EvaluationDomain& domain, const std::vector<std::uint8_t>& members) {
  if (!domain.is_tensor_grid()) throw DomainError("components need a tensor grid");
  const Eigen::Index count = domain.node_count();
  if (static_cast<Eigen::Index>(members.size()) != count) {
    throw InputError("membership flags do not match the domain");
  }
  const Eigen::Index r = domain.resolution;
  const Eigen::Index n = domain.dim();
  std::vector<std::uint8_t> seen(members.size(), 0);
  std::vector<Eigen::Index> stack;
  int components = 0;
  for (Eigen::Index start = 0; start < count; ++start) {
    if (!members[static_cast<size_t>(start)] || seen[static_cast<size_t>(start)]) continue;
    ++components;
    stack.push_back(start);
    seen[static_cast<size_t>(start)] = 1;
    while (!stack.empty()) {
      const Eigen::Index cur = stack.back();
      stack.pop_back();
      Eigen::Index stride = 1;
      for (Eigen::Index d = 0; d < n; ++d) {
        const Eigen::Index coord = (cur / stride) % r;
        for (int dir : {-1, 1}) {
          if ((dir < 0 && coord == 0) || (dir > 0 && coord == r - 1)) continue;
          const Eigen::Index nb = cur + dir * stride;
          if (members[static_cast<size_t>(nb)] && !seen[static_cast<size_t>(nb)]) {
            seen[static_cast<size_t>(nb)] = 1;
            stack.push_back(nb);
          }
        }
        stride *= r;
      }
    }
  }
  return components;
}

std::vector<Eigen::Index> local_maxima_1d(const Eigen::VectorXd& values) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 1; i + 1 < values.size(); ++i) {
    if (values(i) > values(i - 1) && values(i) >= values(i + 1)) out.push_back(i);
  }
  return out;
}

double l1_distance(const DensityEstimate& density,
                   const std::function<double(const Eigen::VectorXd&)>& truth) {
  const PointSet nodes = density.domain().nodes();
  const Eigen::VectorXd w = density.domain().weights();
  const Eigen::VectorXd rho = density.node_density();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    acc += w(i) * std::abs(rho(i) - truth(nodes.row(i).transpose()));
  }
  return acc;
}

void write_density_csv(std::ostream& os, const DensityEstimate& density, const LevelSet* support,
                       const HeaderFields& extra) {
  os << "# kgram density v1\n";
  os << "# Z=" << format_double(density.normalizer()) << '\n';
  os << "# kernel=" << density.model().kernel().describe() << '\n';
  os << "# lambda=" << format_double(density.model().lambda()) << '\n';
  if (support) os << "# tau=" << format_double(support->threshold) << '\n';
  for (const auto& [k, v] : extra) os << "# " << k << '=' << v << '\n';
  const Eigen::Index n = density.domain().dim();
  for (Eigen::Index d = 0; d < n; ++d) os << 'x' << (d + 1) << ',';
  os << "Lc,density" << (support ? ",in_support" : "") << '\n';
  const PointSet nodes = density.domain().nodes();
  const Eigen::VectorXd rho = density.node_density();
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    for (Eigen::Index d = 0; d < n; ++d) os << format_double(nodes(i, d)) << ',';
    os << format_double(density.node_energy()(i)) << ',' << format_double(rho(i));
    if (support) os << ',' << int{support->members[static_cast<size_t>(i)]};
    os << '\n';
  }
}

void write_level_set_csv(std::ostream& os, const EvaluationDomain& domain, const LevelSet& set,
                         const HeaderFields& extra) {
  os << "# kgram level set v1\n";
  os << "# threshold=" << format_double(set.threshold) << '\n';
  for (const auto& [k, v] : extra) os << "# " << k << '=' << v << '\n';
  const Eigen::Index n = domain.dim();
  for (Eigen::Index d = 0; d < n; ++d) os << 'x' << (d + 1) << ',';
  os << "value,member\n";
  const PointSet nodes = domain.nodes();
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    for (Eigen::Index d = 0; d < n; ++d) os << format_double(nodes(i, d)) << ',';
    os << format_double(set.values(i)) << ',' << int{set.members[static_cast<size_t>(i)]} << '\n';
  }
}

}  // namespace kgram
