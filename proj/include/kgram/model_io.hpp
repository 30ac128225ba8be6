#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "kgram/estimators.hpp"
#include "kgram/io.hpp"

namespace kgram {

// Versioned binary container: magic, version, header fields (config hash,
// code version, ...), kind, kernel, lambda, scaling, centering statistics,
// spectrum and samples (with provenance).
void write_model_binary(std::ostream& os, const EnergyModel& model, const HeaderFields& extra = {});
// Header fields are stored into `fields` when given.
EnergyModel read_model_binary(std::istream& is, HeaderFields* fields = nullptr);

// JSON metadata describing the model (no sample data).
std::string model_metadata_json(const EnergyModel& model, const HeaderFields& extra = {});

// Writes <stem>.kgmodel and <stem>.json.
void save_model(const std::filesystem::path& stem, const EnergyModel& model,
                const HeaderFields& extra = {});
EnergyModel load_model(const std::filesystem::path& binary_path, HeaderFields* fields = nullptr);

}  // namespace kgram
