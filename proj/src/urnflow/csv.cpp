#include "urnflow/csv.hpp"

namespace urnflow::io {

void CsvWriter::header(const std::vector<std::string>& names) {
  for (const auto& n : names) raw(n);
  end_row();
}

CsvWriter& CsvWriter::raw(const std::string& s) {
  if (!first_) os_ << ',';
  os_ << s;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

std::vector<std::string> indexed(const std::string& prefix, int k) {
  std::vector<std::string> out;
  for (int i = 1; i <= k; ++i) out.push_back(prefix + "_" + std::to_string(i));
  return out;
}

}  // namespace urnflow::io
