#include "qclab/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qclab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw std::invalid_argument("CsvTable: at least one column");
}

void CsvTable::add_row(std::vector<std::string> fields) {
  if (fields.size() != columns_.size())
    throw std::invalid_argument("CsvTable: row width does not match header");
  rows_.push_back(std::move(fields));
}

std::string CsvTable::to_string() const {
  std::string out = kSchemaLine;
  out += '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += csv_quote(columns_[i]);
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_quote(row[i]);
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << to_string();
  if (!out) throw std::runtime_error("write failed: " + path);
}

CsvTable to_csv(const MCEstimate& est) {
  CsvTable table({"value", "std_error", "samples", "seed"});
  table.add(est.value, est.std_error, est.samples, est.seed);
  return table;
}

CsvTable to_csv(const std::vector<JLReport>& reports) {
  CsvTable table({"n", "k", "epsilon", "N", "trials", "empirical_failure", "seed"});
  for (const JLReport& r : reports)
    table.add(r.n, r.k, r.epsilon, r.num_points, r.trials, r.empirical_failure, r.seed);
  return table;
}

CsvTable to_csv(const CoveringReport& report) {
  CsvTable table({"dim", "t", "cloud_size", "seed", "center_shrink", "upper_count", "m_kb",
                  "volume_lower"});
  table.add(report.dim, report.t, report.cloud_size, report.seed, report.center_shrink,
            report.upper_count, report.m_kb,
            report.volume_lower ? format_double(*report.volume_lower) : std::string());
  return table;
}

CsvTable to_csv(const std::vector<EntropyEstimate>& estimates) {
  CsvTable table({"k", "e_k", "lower", "upper"});
  for (const EntropyEstimate& e : estimates) table.add(e.k, e.e_k, e.lower, e.upper);
  return table;
}

std::string points_to_text(const std::vector<VectorXd>& points) {
  std::string out;
  for (const VectorXd& p : points) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (i) out += ' ';
      out += format_double(p[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace qclab
