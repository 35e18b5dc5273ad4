#include "canace/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace canace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (!header.empty() && row.size() != header.size())
    throw std::invalid_argument("csv: row width does not match header");
  rows.push_back(std::move(row));
}

void CsvTable::write(std::ostream& os) const {
  auto line = [&os](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << csv_escape(fields[i]);
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void CsvTable::write_file(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write(os);
}

}  // namespace canace
