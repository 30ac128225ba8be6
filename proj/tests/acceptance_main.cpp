// One line per acceptance criterion; exit status is non-zero if any fails.
#include <algorithm>
#include <iostream>

#include "kgram/acceptance.hpp"

int main(int argc, char** argv) {
  kgram::AcceptanceOptions options;
  if (argc > 1) options.scratch = argv[1];
  const auto results = kgram::run_acceptance(options, [](const kgram::CriterionResult& r) {
    std::cout << kgram::format_result_line(r) << std::endl;
  });
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
  return passed == static_cast<long>(results.size()) ? 0 : 1;
}
