#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "kgram/simulate.hpp"

namespace kgram {

// Extra "# key=value" lines written into file headers (config hash, version).
using HeaderFields = std::map<std::string, std::string>;

// 17 significant digits, "%.17g".
std::string format_double(double v);

// Appends one CSV row of doubles terminated by '\n'.
void write_csv_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Ensemble CSV: "# key=value" provenance lines, a column header x1,...,xn,
/// then one point per row.
void write_ensemble_csv(std::ostream& os, const SampleEnsemble& ens, const HeaderFields& extra = {});
void save_ensemble_csv(const std::filesystem::path& path, const SampleEnsemble& ens,
                       const HeaderFields& extra = {});
SampleEnsemble read_ensemble_csv(std::istream& is);
SampleEnsemble load_ensemble_csv(const std::filesystem::path& path);

/// Binary ensemble cache. Entries are addressed by a caller-chosen key (usually
/// a hash of the simulation request) and carry the content hash of the stored
/// ensemble, which is re-checked on load.
class EnsembleCache {
 public:
  explicit EnsembleCache(std::filesystem::path dir);

  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path store(const std::string& key, const SampleEnsemble& ens) const;
  // Stores under the ensemble's own content hash and returns that key.
  std::string store(const SampleEnsemble& ens) const;
  // nullopt when the entry is absent; FileError when it is present but corrupt.
  std::optional<SampleEnsemble> load(const std::string& key) const;

 private:
  std::filesystem::path dir_;
};

void write_ensemble_binary(std::ostream& os, const SampleEnsemble& ens);
SampleEnsemble read_ensemble_binary(std::istream& is);

}  // namespace kgram
