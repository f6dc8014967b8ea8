#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace misfit {

// Minimal CSV writer: '.' decimal point, LF line endings, doubles with 17
// significant digits so they survive a round trip.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);

 private:
  std::ofstream out_;
};

std::string format_double(double v);

}  // namespace misfit
