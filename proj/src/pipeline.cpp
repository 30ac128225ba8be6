#include "kgram/pipeline.hpp"

#include <fstream>
#include <memory>

#include <json.hpp>

#include "kgram/density.hpp"
#include "kgram/errors.hpp"
#include "kgram/io.hpp"
#include "kgram/model_io.hpp"

namespace kgram {

namespace fs = std::filesystem;

namespace {

HeaderFields stamp(const ExperimentConfig& cfg) {
  return {{"config_hash", cfg.hash()}, {"code_version", code_version()}, {"experiment", cfg.name}};
}

fs::path ensemble_path(const fs::path& out, std::string_view which) {
  return out / ("ensemble_" + std::string(which) + ".csv");
}

SampleEnsemble load_required_ensemble(const fs::path& out, std::string_view which) {
  const fs::path p = ensemble_path(out, which);
  if (!fs::exists(p)) {
    throw FileError("missing ensemble " + p.string() + " (run the simulate stage first)");
  }
  return load_ensemble_csv(p);
}

std::shared_ptr<const EnergyModel> load_required_model(const fs::path& out, std::string_view stem) {
  const fs::path p = out / (std::string(stem) + ".kgmodel");
  if (!fs::exists(p)) throw FileError("missing model file " + p.string() + " (run the fit stage first)");
  return std::make_shared<const EnergyModel>(load_model(p));
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw FileError("cannot write " + p.string());
  return os;
}

void write_header(std::ostream& os, const std::string& title, const HeaderFields& fields) {
  os << "# " << title << "\n";
  for (const auto& [k, v] : fields) os << "# " << k << "=" << v << "\n";
}

}  // namespace

std::vector<fs::path> run_simulate(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const ControlSystem sys = cfg.system.build();
  const HeaderFields extra = stamp(cfg);
  std::vector<fs::path> written;
  auto save = [&](std::string_view which, const SampleEnsemble& ens) {
    const fs::path p = ensemble_path(out, which);
    save_ensemble_csv(p, ens, extra);
    written.push_back(p);
  };
  if (cfg.ensembles.impulse) save("impulse", impulse_responses(sys, cfg.grid));
  if (cfg.ensembles.release) save("release", release_responses(sys, cfg.grid));
  if (cfg.ensembles.stationary) {
    const StationaryConfig& st = *cfg.ensembles.stationary;
    if (!st.seed) throw ConfigError("stationary simulation requires a seed");
    StationaryPlan plan{st.n_paths, st.burn_in, *st.seed, st.samples_per_path, st.stride};
    save("stationary", sde_trajectories(sys, cfg.grid, plan));
  }
  return written;
}

std::vector<fs::path> run_fit(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const HeaderFields extra = stamp(cfg);
  std::vector<fs::path> written;

  const SampleEnsemble source = load_required_ensemble(out, cfg.fit_source);
  const KernelSpec kc = cfg.kernel.resolve(source.points);
  const double lambda = cfg.lambda.resolve(static_cast<long>(source.size()));
  const EnergyModel model_c =
      fit_controllability(source, kc, lambda, ControllabilityOptions{cfg.scaling, cfg.center});
  save_model(out / "model_c", model_c, extra);
  written.push_back(out / "model_c.kgmodel");
  written.push_back(out / "model_c.json");

  if (cfg.ensembles.release) {
    const SampleEnsemble release = load_required_ensemble(out, "release");
    const EnergyModel model_o =
        fit_observability(release, cfg.kernel.resolve(release.points), cfg.scaling);
    save_model(out / "model_o", model_o, extra);
    written.push_back(out / "model_o.kgmodel");
    written.push_back(out / "model_o.json");
  }
  return written;
}

std::vector<fs::path> run_eval(const ExperimentConfig& cfg, const fs::path& out) {
  PointSet probes;
  if (cfg.probe_points) {
    probes = *cfg.probe_points;
  } else if (cfg.probes) {
    probes = cfg.probes->domain().nodes();
  } else if (cfg.domain) {
    probes = cfg.domain->domain().nodes();
  } else {
    throw ConfigError("eval needs a 'probes' or 'domain' section");
  }

  const auto model_c = load_required_model(out, "model_c");
  std::shared_ptr<const EnergyModel> model_o;
  if (fs::exists(out / "model_o.kgmodel")) model_o = load_required_model(out, "model_o");
  if (model_c->dim() != probes.cols()) {
    throw InputError("probe dimension " + std::to_string(probes.cols()) +
                     " does not match the model dimension " + std::to_string(model_c->dim()));
  }

  const Eigen::VectorXd lc = eval_Lc_batch(*model_c, probes);
  Eigen::VectorXd lo;
  if (model_o) lo = eval_Lo_batch(*model_o, probes);

  const fs::path p = out / "energies.csv";
  std::ofstream os = open_output(p);
  write_header(os, "kgram energies v1", stamp(cfg));
  for (Eigen::Index d = 0; d < probes.cols(); ++d) os << "x" << d + 1 << ",";
  os << "Lc" << (model_o ? ",Lo" : "") << "\n";
  Eigen::RowVectorXd row(probes.cols() + 1 + (model_o ? 1 : 0));
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    row.head(probes.cols()) = probes.row(i);
    row(probes.cols()) = lc(i);
    if (model_o) row(probes.cols() + 1) = lo(i);
    write_csv_row(os, row);
  }
  if (!os) throw FileError("failed writing " + p.string());
  return {p};
}

std::vector<fs::path> run_fit_eval(const ExperimentConfig& cfg, const fs::path& out) {
  std::vector<fs::path> written = run_fit(cfg, out);
  for (auto& p : run_eval(cfg, out)) written.push_back(std::move(p));
  return written;
}

std::vector<fs::path> run_density(const ExperimentConfig& cfg, const fs::path& out) {
  if (!cfg.domain) throw ConfigError("density needs a 'domain' section");
  const auto model = load_required_model(out, "model_c");
  if (model->samples().kind != EnsembleKind::kStationary) {
    throw InputError("density estimation needs a model fitted on stationary samples");
  }
  const EvaluationDomain domain = cfg.domain->domain();
  const DensityEstimate dens = estimate_density(model, domain);
  const SupportEstimate support = support_estimate(dens, cfg.support_mass);
  const HeaderFields extra = stamp(cfg);

  const fs::path density_csv = out / "density.csv";
  {
    std::ofstream os = open_output(density_csv);
    write_density_csv(os, dens, &support.set, extra);
    if (!os) throw FileError("failed writing " + density_csv.string());
  }
  const fs::path support_csv = out / "support.csv";
  {
    std::ofstream os = open_output(support_csv);
    write_level_set_csv(os, domain, support.set, extra);
    if (!os) throw FileError("failed writing " + support_csv.string());
  }

  nlohmann::ordered_json report;
  report["schema"] = "kgram.density_report";
  report["schema_version"] = 1;
  report["config_hash"] = cfg.hash();
  report["code_version"] = code_version();
  report["experiment"] = cfg.name;
  report["system"] = cfg.system.builtin;
  report["kernel"] = model->kernel().describe();
  report["lambda"] = model->lambda();
  report["m"] = model->m();
  report["Z"] = dens.normalizer();
  report["node_mass"] = dens.node_mass();
  report["tau"] = support.tau;
  report["requested_mass"] = support.requested_mass;
  report["captured_mass"] = support.captured_mass;
  report["support_nodes"] = support.set.count();
  report["grid_nodes"] = domain.node_count();
  if (domain.is_tensor_grid()) report["support_components"] = count_components(domain, support.set.members);
  if (model->rank_deficient()) {
    report["warning"] = "smallest retained eigenvalue is zero; the invariant measure may not be unique";
  }
  if (auto truth = cfg.system.stationary_density()) {
    report["l1_vs_oracle"] = l1_distance(dens, truth);
  } else {
    report["l1_vs_oracle"] = nullptr;
  }
  const fs::path report_json = out / "report.json";
  {
    std::ofstream os = open_output(report_json);
    os << report.dump(2) << "\n";
    if (!os) throw FileError("failed writing " + report_json.string());
  }
  return {density_csv, support_csv, report_json};
}

}  // namespace kgram
