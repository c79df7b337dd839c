#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qclab/body.hpp"
#include "qclab/covering.hpp"
#include "qclab/functionals.hpp"
#include "qclab/projections.hpp"

namespace qclab {

// Every CSV artifact starts with this versioned comment line.
inline constexpr const char* kSchemaLine = "# quasiconvex-lab v0.1.0 schema=1";

// Round-trippable decimal rendering (%.17g); the CSV layer never loses bits.
std::string format_double(double v);

// RFC-style quoting, applied only when the field needs it.
std::string csv_quote(const std::string& field);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  std::size_t column_count() const { return columns_.size(); }
  std::size_t row_count() const { return rows_.size(); }

  void add_row(std::vector<std::string> fields);

  template <typename... Ts>
  void add(const Ts&... fields) {
    add_row({to_field(fields)...});
  }

  // Schema line, header row, data rows; '\n' endings throughout.
  std::string to_string() const;
  void write_file(const std::string& path) const;

 private:
  static std::string to_field(double v) { return format_double(v); }
  static std::string to_field(int v) { return std::to_string(v); }
  static std::string to_field(long v) { return std::to_string(v); }
  static std::string to_field(long long v) { return std::to_string(v); }
  static std::string to_field(unsigned long v) { return std::to_string(v); }
  static std::string to_field(unsigned long long v) { return std::to_string(v); }
  static std::string to_field(const std::string& s) { return s; }
  static std::string to_field(const char* s) { return s; }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

CsvTable to_csv(const MCEstimate& est);
CsvTable to_csv(const std::vector<JLReport>& reports);
CsvTable to_csv(const CoveringReport& report);
CsvTable to_csv(const std::vector<EntropyEstimate>& estimates);

// One point per row, coordinates space-separated, %.17g.
std::string points_to_text(const std::vector<VectorXd>& points);

}  // namespace qclab
