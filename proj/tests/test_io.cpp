#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "kgram/errors.hpp"
#include "kgram/io.hpp"
#include "kgram/model_io.hpp"
#include "kgram/systems.hpp"
#include "test_util.hpp"

using namespace kgram;

namespace {

SampleEnsemble some_stationary() {
  return sde_trajectories(make_builtin_system("vanderpol_stabilized"), SimulationGrid(2.0, 200), 40, 2.0, 3);
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    std::ostringstream os;
    write_csv_row(os, Eigen::RowVector3d(1.5, -2.0, 1e-300));
    CHECK(os.str() == "1.5,-2,1e-300\n");
  }

  TEST_CASE("ensemble CSV round trip is exact") {
    const SampleEnsemble ens = some_stationary();
    std::stringstream buf;
    write_ensemble_csv(buf, ens, {{"config_hash", "feed"}});
    const std::string text = buf.str();
    CHECK(text.rfind("# kgram ensemble v1\n", 0) == 0);
    CHECK(text.find("# config_hash=feed\n") != std::string::npos);
    CHECK(text.find("\nx1,x2\n") != std::string::npos);
    const SampleEnsemble back = read_ensemble_csv(buf);
    CHECK(back.points == ens.points);
    CHECK(back.kind == ens.kind);
    CHECK(back.provenance.seed == ens.provenance.seed);
    CHECK(back.provenance.system_fingerprint == ens.provenance.system_fingerprint);
    CHECK(back.content_hash() == ens.content_hash());

    const SampleEnsemble imp = impulse_responses(make_builtin_system("linear2d"), SimulationGrid(1.0, 20));
    std::stringstream b2;
    write_ensemble_csv(b2, imp);
    const SampleEnsemble imp_back = read_ensemble_csv(b2);
    CHECK(imp_back.channels == 1);
    CHECK(imp_back.kind == EnsembleKind::kControllability);
    CHECK(imp_back.provenance.grid.steps == 20);
  }

  TEST_CASE("edited CSV is rejected") {
    const SampleEnsemble ens = some_stationary();
    std::stringstream buf;
    write_ensemble_csv(buf, ens);
    std::string text = buf.str();
    // Replace the last data row with a different point.
    const auto pos = text.rfind('\n', text.size() - 2);
    std::stringstream edited;
    edited << text.substr(0, pos + 1) << "1,2\n";
    CHECK_THROWS_AS(read_ensemble_csv(edited), FileError);
    std::stringstream junk("x1\n1\n");
    CHECK_THROWS_AS(read_ensemble_csv(junk), FileError);
    CHECK_THROWS_AS(load_ensemble_csv("/nonexistent/file.csv"), FileError);
  }

  TEST_CASE("binary ensemble and cache") {
    const SampleEnsemble ens = some_stationary();
    std::stringstream buf;
    write_ensemble_binary(buf, ens);
    const SampleEnsemble back = read_ensemble_binary(buf);
    CHECK(back.points == ens.points);

    const auto dir = test::scratch_dir("cache");
    const EnsembleCache cache(dir);
    CHECK_FALSE(cache.load("absent").has_value());
    const std::string key = cache.store(ens);
    CHECK(key == ens.content_hash());
    const auto hit = cache.load(key);
    REQUIRE(hit.has_value());
    CHECK(hit->points == ens.points);
    CHECK_THROWS_AS(cache.path_for("../escape"), InputError);

    // Corrupt one byte in the payload.
    {
      std::fstream f(cache.path_for(key), std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(-3, std::ios::end);
      f.put('\x7f');
    }
    CHECK_THROWS_AS(cache.load(key), FileError);
    std::stringstream garbage("not a container");
    CHECK_THROWS_AS(read_ensemble_binary(garbage), FileError);
  }

  TEST_CASE("model container round trip") {
    const SampleEnsemble ens = some_stationary();
    const EnergyModel mc = fit_controllability(ens, KernelSpec::laplacian(0.7), 0.2,
                                               {GramianScaling::kRiemannTOverM, true});
    const EnergyModel mo = fit_observability(ens, KernelSpec::gaussian(0.4));
    const auto dir = test::scratch_dir("models");
    save_model(dir / "c", mc, {{"config_hash", "0123"}, {"code_version", "9.9"}});
    save_model(dir / "o", mo);
    HeaderFields fields;
    const EnergyModel mc2 = load_model(dir / "c.kgmodel", &fields);
    const EnergyModel mo2 = load_model(dir / "o.kgmodel");
    CHECK(fields.at("config_hash") == "0123");
    CHECK(mc2.kernel() == mc.kernel());
    CHECK(mc2.centered());
    CHECK(mc2.scaling() == GramianScaling::kRiemannTOverM);
    const PointSet probes = Eigen::MatrixXd::Random(30, 2);
    CHECK(eval_Lc_batch(mc2, probes) == eval_Lc_batch(mc, probes));
    CHECK(eval_Lo_batch(mo2, probes) == eval_Lo_batch(mo, probes));

    std::ifstream meta(dir / "c.json");
    const auto j = nlohmann::json::parse(meta);
    CHECK(j.at("schema") == "kgram.model");
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("config_hash") == "0123");
    CHECK(j.at("m") == 40);

    CHECK_THROWS_AS(load_model(dir / "missing.kgmodel"), FileError);
    std::ofstream(dir / "bad.kgmodel") << "KGMODEL";
    CHECK_THROWS_AS(load_model(dir / "bad.kgmodel"), FileError);
  }
}
