#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace nadpcm {

using CsvCell = std::variant<std::string, std::int64_t, double>;

/// Header row plus data rows. Reals are written with 6 significant digits.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<CsvCell>> rows;
};

std::string format_real(double value);
std::string to_csv(const CsvTable& table);

}  // namespace nadpcm
