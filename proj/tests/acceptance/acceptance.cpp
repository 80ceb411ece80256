// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Usage: urnflow_acceptance [filter] [jobs] [out_dir]

#include <cstdio>
#include <string>

#include "urnflow/verify.hpp"

int main(int argc, char** argv) {
  urnflow::verify::Options options;
  const std::string filter = argc > 1 ? argv[1] : "all";
  options.jobs = argc > 2 ? static_cast<unsigned>(std::stoul(argv[2])) : 4;
  if (argc > 3) options.out_dir = argv[3];
  options.progress = [](const std::string& line) {
    if (line.rfind("running", 0) == 0) return;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
  };
  const auto report = urnflow::verify::run(filter, options);
  std::size_t passed = 0;
  for (const auto& r : report.results) passed += r.passed;
  std::printf("%zu/%zu criteria passed\n", passed, report.results.size());
  return report.all_passed() ? 0 : 1;
}
