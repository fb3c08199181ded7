#include "datashifts/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace datashifts {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, const std::string& origin, std::size_t line,
                  const std::string& column) {
  const std::string where = origin + " line " + std::to_string(line) + ", column '" + column + "'";
  if (cell.empty()) throw InvalidInput("missing value at " + where);
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw InvalidInput("non-numeric value '" + cell + "' at " + where);
  }
  if (!std::isfinite(v)) throw InvalidInput("non-finite value '" + cell + "' at " + where);
  return v;
}

}  // namespace

Eigen::Index CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidInput("no column named '" + name + "'");
  return static_cast<Eigen::Index>(it - header.begin());
}

CsvTable read_csv(std::istream& in, const std::string& origin) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (table.header.empty()) {
      if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) cells.front() = trim(cells.front().substr(3));
      for (const auto& c : cells) {
        if (c.empty()) throw InvalidInput(origin + " has an empty column name in its header");
      }
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw InvalidInput(origin + " line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " fields, expected " +
                         std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      row[k] = parse_cell(cells[k], origin, line_no, table.header[k]);
    }
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw InvalidInput(origin + " is empty (no header row)");
  if (rows.empty()) throw InvalidInput(origin + " has a header but no data rows");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv(in, path);
}

LabeledSample sample_from_table(const CsvTable& table,
                                const std::vector<std::string>& label_columns, Domain domain) {
  std::vector<Eigen::Index> label_idx;
  for (const auto& name : label_columns) {
    const Eigen::Index c = table.column(name);
    if (std::find(label_idx.begin(), label_idx.end(), c) != label_idx.end()) {
      throw InvalidInput("label column '" + name + "' listed twice");
    }
    label_idx.push_back(c);
  }
  std::vector<Eigen::Index> covariate_idx;
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(table.header.size()); ++c) {
    if (std::find(label_idx.begin(), label_idx.end(), c) == label_idx.end()) {
      covariate_idx.push_back(c);
    }
  }
  if (covariate_idx.empty()) throw InvalidInput("no covariate columns left after removing labels");

  const Eigen::Index n = table.values.rows();
  Matrix x(n, static_cast<Eigen::Index>(covariate_idx.size()));
  for (std::size_t k = 0; k < covariate_idx.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = table.values.col(covariate_idx[k]);
  }
  if (label_idx.empty()) return LabeledSample(std::move(x), std::nullopt, domain);
  Matrix y(n, static_cast<Eigen::Index>(label_idx.size()));
  for (std::size_t k = 0; k < label_idx.size(); ++k) {
    y.col(static_cast<Eigen::Index>(k)) = table.values.col(label_idx[k]);
  }
  return LabeledSample(std::move(x), std::move(y), domain);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << "row,col,mass\n";
  for (Eigen::Index i = 0; i < plan.coupling.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.coupling.cols(); ++j) {
      const double m = plan.coupling(i, j);
      if (m == 0.0) continue;
      out << i << ',' << j << ',' << format_double(m) << '\n';
    }
  }
}

}  // namespace datashifts
