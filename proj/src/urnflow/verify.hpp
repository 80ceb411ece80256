#pragma once

// The acceptance suite: numbered criteria with pass/fail verdicts.

#include <functional>
#include <string>
#include <vector>

namespace urnflow::verify {

struct Options {
  unsigned jobs = 1;
  /// Directory for the statistical runs' CSV files; empty disables writing.
  std::string out_dir;
  /// Negative control: perturbs the rule-summed drift seen by the drift
  /// oracles so they must fail.
  bool tamper_drift = false;
  std::function<void(const std::string&)> progress;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Report {
  std::vector<CriterionResult> results;

  bool all_passed() const;
};

struct CriterionInfo {
  int id;
  const char* name;
};

const std::vector<CriterionInfo>& criteria();

/// Resolves "all", a group name ("drift-oracles", "fast", "statistical"), a
/// criterion name or number, or a comma-separated list of those.
std::vector<int> select(const std::string& filter);

Report run(const std::string& filter, const Options& options);

std::string format_result(const CriterionResult& r);

}  // namespace urnflow::verify
