#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace entlab {

// 17 significant digits, round-trip exact; nan/inf spelled out.
std::string format_double(double v);

using CsvCell = std::variant<double, std::int64_t, std::string, bool>;

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<CsvCell> row);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  void write(std::ostream& os) const;
  void write_file(const std::string& path) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<CsvCell>> rows_;
};

// Plain comma-separated read (no quoting). First row is the header.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;
};
CsvData read_csv(const std::string& path);

}  // namespace entlab
