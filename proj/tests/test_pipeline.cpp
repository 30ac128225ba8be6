#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "kgram/errors.hpp"
#include "kgram/linear_oracle.hpp"
#include "kgram/pipeline.hpp"
#include "test_util.hpp"

using namespace kgram;
namespace fs = std::filesystem;

namespace {

const char* kOu = R"(name: unit_ou
system: {builtin: scalar_ou}
grid: {T: 5, N: 500}
ensembles:
  stationary: {paths: 300, burn_in: 5, seed: 7}
kernel: {family: laplacian, bandwidth: median}
lambda: schedule
domain: {lo: [-3], hi: [3], resolution: 121}
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

// Reads the numeric rows of a CSV with "# " comment lines and one header row.
std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("same config and seed give identical bytes") {
    const auto a = test::scratch_dir("pipe_a");
    const auto b = test::scratch_dir("pipe_b");
    const ExperimentConfig cfg = parse_config(kOu);
    for (const auto& dir : {a, b}) {
      run_simulate(cfg, dir);
      run_fit_eval(cfg, dir);
      run_density(cfg, dir);
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      const auto name = entry.path().filename();
      CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name.string());
      ++compared;
    }
    CHECK(compared == 7);
  }

  TEST_CASE("every artifact is stamped") {
    const auto dir = test::scratch_dir("pipe_stamp");
    const ExperimentConfig cfg = parse_config(kOu);
    std::vector<fs::path> files = run_simulate(cfg, dir);
    for (const auto& p : run_fit_eval(cfg, dir)) files.push_back(p);
    for (const auto& p : run_density(cfg, dir)) files.push_back(p);
    for (const auto& p : files) {
      const std::string text = slurp(p);
      CHECK_MESSAGE(text.find(cfg.hash()) != std::string::npos, p.string());
      CHECK_MESSAGE(text.find(code_version()) != std::string::npos, p.string());
    }
  }

  TEST_CASE("seed override changes the hash") {
    const ExperimentConfig base = parse_config(kOu);
    const ExperimentConfig same = parse_config(kOu, 7);
    const ExperimentConfig other = parse_config(kOu, 8);
    CHECK(base.hash() == same.hash());
    CHECK(base.hash() != other.hash());
    CHECK(other.ensembles.stationary->seed == 8u);
  }

  TEST_CASE("config errors carry line numbers") {
    CHECK(config_error_line(R"(name: bad
system: {builtin: scalar_ou}
grid: {T: 5, N: 0}
ensembles:
  stationary: {paths: 10, seed: 1}
)") == 3);
    CHECK(config_error_line(R"(name: bad
system: {builtin: scalar_ou}
grid: {T: 5, N: 50}
ensembles:
  stationary: {paths: 10}
)") == 5);
    CHECK(config_error_line(R"(name: bad
system: {builtin: scalar_ou}
grid: {T: 5, N: 50}
ensembles: {impulse: true}
colour: blue
)") == 5);
    CHECK(config_error_line("name: [unclosed\n") > 0);
    CHECK_THROWS_AS(parse_config(R"(system: {builtin: no_such_system}
grid: {T: 1, N: 10}
)"),
                    ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), FileError);
  }

  TEST_CASE("double well with 5000 paths") {
    const auto dir = test::scratch_dir("pipe_dw");
    const ExperimentConfig cfg = parse_config(R"(name: unit_dw
system: {builtin: double_well}
grid: {T: 2, N: 200}
ensembles:
  stationary: {paths: 5000, burn_in: 2, seed: 11}
)");
    run_simulate(cfg, dir);
    CHECK(csv_rows(dir / "ensemble_stationary.csv").size() == 5000);
    const SampleEnsemble ens = load_ensemble_csv(dir / "ensemble_stationary.csv");
    CHECK(ens.size() == 5000);
    CHECK(ens.points.allFinite());
  }

  TEST_CASE("linear kernel on impulse data reproduces the linear energies") {
    const auto dir = test::scratch_dir("pipe_linear");
    const ExperimentConfig cfg = parse_config(R"(name: unit_linear
system: {builtin: linear2d}
grid: {T: 10, N: 1000}
ensembles: {impulse: true, release: true}
kernel: {family: linear}
lambda: 1.0e-9
scaling: riemann_T_over_m
fit_source: impulse
probes:
  points: [[1.0, 0.0], [0.0, 1.0], [0.7, -0.4], [-1.2, 0.5], [0.0, 0.0]]
)");
    run_simulate(cfg, dir);
    run_fit_eval(cfg, dir);
    const auto rows = csv_rows(dir / "energies.csv");
    REQUIRE(rows.size() == 5);
    const ControlSystem sys = cfg.system.build();
    REQUIRE(sys.linear_form().has_value());
    const auto& lf = *sys.linear_form();
    const LinearGramians g = linear_gramians(lf.A, lf.B, lf.C);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      const Eigen::Vector2d x(rows[i][0], rows[i][1]);
      const LinearEnergies truth = linear_energies(g, x);
      CHECK(rows[i][2] == doctest::Approx(truth.controllability).epsilon(0.05));
      CHECK(rows[i][3] == doctest::Approx(truth.observability).epsilon(0.05));
    }
    CHECK(rows.back()[2] == 0.0);
    CHECK(rows.back()[3] == 0.0);
  }

  TEST_CASE("density report") {
    const auto dir = test::scratch_dir("pipe_density");
    std::string text = kOu;
    text += "density: {support_mass: 0.999}\n";
    const ExperimentConfig cfg = parse_config(text);
    run_simulate(cfg, dir);
    run_fit(cfg, dir);
    run_density(cfg, dir);
    std::ifstream in(dir / "report.json");
    const auto report = nlohmann::json::parse(in);
    CHECK(report.at("schema") == "kgram.density_report");
    CHECK(report.at("config_hash") == cfg.hash());
    CHECK(report.at("l1_vs_oracle").is_number());
    CHECK(report.at("captured_mass").get<double>() >= 0.99);
    CHECK(report.at("node_mass").get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(report.at("support_components").get<int>() >= 1);
    CHECK(csv_rows(dir / "density.csv").size() == 121);
  }

  TEST_CASE("stages need their inputs") {
    const ExperimentConfig cfg = parse_config(kOu);
    const auto empty = test::scratch_dir("pipe_empty");
    CHECK_THROWS_AS(run_fit(cfg, empty), FileError);
    CHECK_THROWS_AS(run_eval(cfg, empty), FileError);
    CHECK_THROWS_AS(run_density(cfg, empty), FileError);
  }
}
