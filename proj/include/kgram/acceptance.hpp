#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace kgram {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  // Measured quantities, in the order they were recorded.
  std::vector<std::pair<std::string, double>> metrics;
  // Human-readable statement of what was checked against which tolerance.
  std::string check;
  std::string error;
  double seconds = 0.0;
  // Wall-clock budget; 0 means none.
  double time_limit = 0.0;
};

struct AcceptanceOptions {
  // Criteria to run (1-based ids); empty runs all ten.
  std::vector<int> only;
  // Working directory for pipeline artifacts.
  std::filesystem::path scratch = std::filesystem::temp_directory_path() / "kgram_acceptance";
};

std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS  3  kernel-trick equivalence  max_rel=1.2e-12 ...  (0.4 s / 30 s)"
std::string format_result_line(const CriterionResult& r);

// Versioned verdict table.
std::string acceptance_json(const std::vector<CriterionResult>& results);

}  // namespace kgram
