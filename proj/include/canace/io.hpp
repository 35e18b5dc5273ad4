#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace canace {

/// Round-trip formatting (%.17g).
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  void write(std::ostream& os) const;
  void write_file(const std::filesystem::path& path) const;
};

std::string csv_escape(const std::string& field);

}  // namespace canace
