#include "kgram/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "kgram/binary.hpp"
#include "kgram/errors.hpp"

namespace kgram {

namespace {

constexpr char kEnsembleMagic[8] = {'K', 'G', 'E', 'N', 'S', 'B', 'I', 'N'};
constexpr std::uint32_t kEnsembleVersion = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw FileError("line " + std::to_string(line) + ": not a number: '" + s + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) os << ',';
    os << format_double(row(j));
  }
  os << '\n';
}

void write_ensemble_csv(std::ostream& os, const SampleEnsemble& ens, const HeaderFields& extra) {
  const auto& p = ens.provenance;
  os << "# kgram ensemble v1\n";
  os << "# kind=" << to_string(ens.kind) << '\n';
  os << "# channels=" << ens.channels << '\n';
  os << "# horizon=" << format_double(p.grid.horizon) << '\n';
  os << "# steps=" << p.grid.steps << '\n';
  os << "# system=" << p.system_name << '\n';
  os << "# system_fingerprint=" << p.system_fingerprint << '\n';
  if (p.seed) os << "# seed=" << *p.seed << '\n';
  if (ens.kind == EnsembleKind::kStationary) {
    os << "# burn_in=" << format_double(p.burn_in) << '\n';
    os << "# stride=" << p.stride << '\n';
  }
  os << "# content_hash=" << ens.content_hash() << '\n';
  for (const auto& [k, v] : extra) os << "# " << k << '=' << v << '\n';
  for (Eigen::Index j = 0; j < ens.dim(); ++j) os << (j ? "," : "") << 'x' << (j + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < ens.size(); ++i) write_csv_row(os, ens.points.row(i));
}

void save_ensemble_csv(const std::filesystem::path& path, const SampleEnsemble& ens,
                       const HeaderFields& extra) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FileError("cannot write " + path.string());
  write_ensemble_csv(os, ens, extra);
  if (!os) throw FileError("write failed for " + path.string());
}

SampleEnsemble read_ensemble_csv(std::istream& is) {
  SampleEnsemble ens;
  std::map<std::string, std::string> fields;
  std::string line;
  int lineno = 0;
  int dim = -1;
  std::vector<double> values;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        fields[trim(line.substr(1, eq - 1))] = trim(line.substr(eq + 1));
      }
      continue;
    }
    if (dim < 0) {
      dim = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    int count = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(parse_double(cell, lineno));
      ++count;
    }
    if (count != dim) {
      throw FileError("line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                      " columns, found " + std::to_string(count));
    }
  }
  if (dim < 0) throw FileError("ensemble CSV has no header row");
  auto need = [&](const char* key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw FileError(std::string("ensemble CSV lacks '") + key + "' field");
    return it->second;
  };
  try {
    ens.kind = ensemble_kind_from_string(need("kind"));
  } catch (const InputError& e) {
    throw FileError(e.what());
  }
  ens.channels = std::stoi(need("channels"));
  ens.provenance.grid.horizon = parse_double(need("horizon"), 0);
  ens.provenance.grid.steps = std::stol(need("steps"));
  ens.provenance.system_name = need("system");
  ens.provenance.system_fingerprint = need("system_fingerprint");
  if (fields.count("seed")) ens.provenance.seed = std::stoull(fields["seed"]);
  if (fields.count("burn_in")) ens.provenance.burn_in = parse_double(fields["burn_in"], 0);
  if (fields.count("stride")) ens.provenance.stride = std::stol(fields["stride"]);
  const Eigen::Index rows = static_cast<Eigen::Index>(values.size()) / dim;
  ens.points = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, dim);
  if (fields.count("content_hash") && fields["content_hash"] != ens.content_hash()) {
    throw FileError("ensemble CSV content hash mismatch (file edited or truncated?)");
  }
  return ens;
}

SampleEnsemble load_ensemble_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open ensemble file " + path.string());
  return read_ensemble_csv(is);
}

void write_ensemble_binary(std::ostream& os, const SampleEnsemble& ens) {
  os.write(kEnsembleMagic, sizeof kEnsembleMagic);
  binary::put(os, kEnsembleVersion);
  binary::put_string(os, std::string(to_string(ens.kind)));
  binary::put<std::int32_t>(os, ens.channels);
  binary::put(os, ens.provenance.grid.horizon);
  binary::put<std::int64_t>(os, ens.provenance.grid.steps);
  binary::put_string(os, ens.provenance.system_name);
  binary::put_string(os, ens.provenance.system_fingerprint);
  binary::put<std::uint8_t>(os, ens.provenance.seed.has_value());
  binary::put<std::uint64_t>(os, ens.provenance.seed.value_or(0));
  binary::put(os, ens.provenance.burn_in);
  binary::put<std::int64_t>(os, ens.provenance.stride);
  binary::put_matrix(os, ens.points);
  binary::put_string(os, ens.content_hash());
}

SampleEnsemble read_ensemble_binary(std::istream& is) {
  char magic[sizeof kEnsembleMagic];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kEnsembleMagic)) {
    throw FileError("not a kgram ensemble container");
  }
  const auto version = binary::get<std::uint32_t>(is);
  if (version != kEnsembleVersion) {
    throw FileError("unsupported ensemble container version " + std::to_string(version));
  }
  SampleEnsemble ens;
  try {
    ens.kind = ensemble_kind_from_string(binary::get_string(is));
  } catch (const InputError& e) {
    throw FileError(e.what());
  }
  ens.channels = binary::get<std::int32_t>(is);
  ens.provenance.grid.horizon = binary::get<double>(is);
  ens.provenance.grid.steps = binary::get<std::int64_t>(is);
  ens.provenance.system_name = binary::get_string(is);
  ens.provenance.system_fingerprint = binary::get_string(is);
  const bool has_seed = binary::get<std::uint8_t>(is) != 0;
  const auto seed = binary::get<std::uint64_t>(is);
  if (has_seed) ens.provenance.seed = seed;
  ens.provenance.burn_in = binary::get<double>(is);
  ens.provenance.stride = binary::get<std::int64_t>(is);
  ens.points = binary::get_matrix(is);
  if (binary::get_string(is) != ens.content_hash()) {
    throw FileError("ensemble container content hash mismatch");
  }
  return ens;
}

EnsembleCache::EnsembleCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path EnsembleCache::path_for(const std::string& key) const {
  if (key.empty() || key.find_first_of("/\\") != std::string::npos || key == "." || key == "..") {
    throw InputError("invalid cache key '" + key + "'");
  }
  return dir_ / (key + ".kgens");
}

std::string EnsembleCache::store(const SampleEnsemble& ens) const {
  std::string key = ens.content_hash();
  store(key, ens);
  return key;
}

std::filesystem::path EnsembleCache::store(const std::string& key, const SampleEnsemble& ens) const {
  std::filesystem::create_directories(dir_);
  const auto path = path_for(key);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw FileError("cannot write cache entry " + tmp);
    write_ensemble_binary(os, ens);
    if (!os) throw FileError("write failed for cache entry " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return path;
}

std::optional<SampleEnsemble> EnsembleCache::load(const std::string& key) const {
  const auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open cache entry " + path.string());
  return read_ensemble_binary(is);
}

}  // namespace kgram
