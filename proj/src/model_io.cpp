#include "kgram/model_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "kgram/binary.hpp"
#include "kgram/errors.hpp"

namespace kgram {

namespace {

constexpr char kModelMagic[8] = {'K', 'G', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

void write_model_binary(std::ostream& os, const EnergyModel& model, const HeaderFields& extra) {
  const auto& p = model.parts();
  os.write(kModelMagic, sizeof kModelMagic);
  binary::put(os, kModelVersion);
  binary::put<std::uint32_t>(os, static_cast<std::uint32_t>(extra.size()));
  for (const auto& [k, v] : extra) {
    binary::put_string(os, k);
    binary::put_string(os, v);
  }
  binary::put_string(os, std::string(to_string(p.kind)));
  binary::put_string(os, std::string(to_string(p.kernel.family)));
  binary::put<std::int32_t>(os, p.kernel.degree);
  binary::put(os, p.kernel.bandwidth);
  binary::put(os, p.lambda);
  binary::put_string(os, std::string(to_string(p.scaling)));
  binary::put<std::uint8_t>(os, p.centered);
  binary::put(os, p.gram_grand_mean);
  binary::put_matrix(os, p.gram_col_means);
  binary::put_matrix(os, p.eigenvalues);
  binary::put_matrix(os, p.eigenvectors);
  write_ensemble_binary(os, p.samples);
}

EnergyModel read_model_binary(std::istream& is, HeaderFields* fields) {
  char magic[sizeof kModelMagic];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kModelMagic)) {
    throw FileError("not a kgram model container");
  }
  const auto version = binary::get<std::uint32_t>(is);
  if (version != kModelVersion) {
    throw FileError("unsupported model container version " + std::to_string(version));
  }
  EnergyModel::Parts p;
  try {
    const auto n_fields = binary::get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_fields; ++i) {
      std::string key = binary::get_string(is);
      std::string value = binary::get_string(is);
      if (fields) (*fields)[std::move(key)] = std::move(value);
    }
    const std::string kind = binary::get_string(is);
    if (kind == "controllability") {
      p.kind = EnergyKind::kControllability;
    } else if (kind == "observability") {
      p.kind = EnergyKind::kObservability;
    } else {
      throw FileError("unknown model kind '" + kind + "'");
    }
    p.kernel.family = kernel_family_from_string(binary::get_string(is));
    p.kernel.degree = binary::get<std::int32_t>(is);
    p.kernel.bandwidth = binary::get<double>(is);
    p.lambda = binary::get<double>(is);
    p.scaling = gramian_scaling_from_string(binary::get_string(is));
    p.centered = binary::get<std::uint8_t>(is) != 0;
    p.gram_grand_mean = binary::get<double>(is);
    p.gram_col_means = binary::get_matrix(is);
    p.eigenvalues = binary::get_matrix(is);
    p.eigenvectors = binary::get_matrix(is);
    p.samples = read_ensemble_binary(is);
    return EnergyModel(std::move(p));
  } catch (const std::invalid_argument& e) {
    throw FileError(std::string("corrupt model container: ") + e.what());
  }
}

std::string model_metadata_json(const EnergyModel& model, const HeaderFields& extra) {
  nlohmann::ordered_json j;
  j["schema"] = "kgram.model";
  j["schema_version"] = 1;
  j["kind"] = to_string(model.kind());
  j["kernel"] = {{"family", to_string(model.kernel().family)},
                 {"degree", model.kernel().degree},
                 {"bandwidth", model.kernel().bandwidth}};
  j["lambda"] = model.lambda();
  j["scaling"] = to_string(model.scaling());
  j["centered"] = model.centered();
  j["m"] = model.m();
  j["dim"] = model.dim();
  j["samples"] = {{"kind", to_string(model.samples().kind)},
                  {"content_hash", model.samples().content_hash()},
                  {"system", model.samples().provenance.system_name}};
  if (model.kind() == EnergyKind::kControllability) {
    j["spectrum"] = {{"max", model.eigenvalues().maxCoeff()},
                     {"min", model.eigenvalues().minCoeff()},
                     {"rank_deficient", model.rank_deficient()}};
  }
  for (const auto& [k, v] : extra) j[k] = v;
  return j.dump(2) + "\n";
}

void save_model(const std::filesystem::path& stem, const EnergyModel& model,
                const HeaderFields& extra) {
  const auto bin = std::filesystem::path(stem.string() + ".kgmodel");
  {
    std::ofstream os(bin, std::ios::binary);
    if (!os) throw FileError("cannot write " + bin.string());
    write_model_binary(os, model, extra);
    if (!os) throw FileError("write failed for " + bin.string());
  }
  const auto meta = std::filesystem::path(stem.string() + ".json");
  std::ofstream os(meta, std::ios::binary);
  if (!os) throw FileError("cannot write " + meta.string());
  os << model_metadata_json(model, extra);
}

EnergyModel load_model(const std::filesystem::path& binary_path, HeaderFields* fields) {
  std::ifstream is(binary_path, std::ios::binary);
  if (!is) throw FileError("cannot open model file " + binary_path.string());
  return read_model_binary(is, fields);
}

}  // namespace kgram
