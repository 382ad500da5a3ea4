#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rlab {

/// Numbers in emitted tables carry 10 significant digits; parsing such a
/// field and re-printing it is byte-stable.
std::string format_number(double v);

/// Rounds to the 10-significant-digit value that format_number prints.
double round_emitted(double v);

struct CsvWriter {
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& fields);
  static std::string escape(const std::string& field);

 private:
  std::ostream& os_;
};

}  // namespace rlab
