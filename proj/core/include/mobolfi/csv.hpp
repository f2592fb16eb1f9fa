#pragma once

#include <string>
#include <vector>

#include "mobolfi/types.hpp"

namespace mobolfi {

struct Table {
  std::vector<std::string> header;
  Matrix data;
};

/// Numeric CSV with a single header row. Values round-trip exactly.
Table read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& data);

}  // namespace mobolfi
