#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "urnflow/format.hpp"

namespace urnflow::io {

/// Minimal row writer: comma separated, no quoting (all fields are numbers or
/// plain identifiers).
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void comment(const std::string& text) { os_ << "# " << text << '\n'; }
  void header(const std::vector<std::string>& names);

  CsvWriter& field(double v) { return raw(format_double(v)); }
  CsvWriter& field(std::int64_t v) { return raw(std::to_string(v)); }
  CsvWriter& field(std::uint64_t v) { return raw(std::to_string(v)); }
  CsvWriter& field(const std::string& v) { return raw(v); }
  void end_row();

 private:
  CsvWriter& raw(const std::string& s);

  std::ostream& os_;
  bool first_ = true;
};

/// Names like prefix_1 .. prefix_k.
std::vector<std::string> indexed(const std::string& prefix, int k);

}  // namespace urnflow::io
