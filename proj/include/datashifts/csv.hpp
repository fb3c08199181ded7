#pragma once

#include "datashifts/core.hpp"
#include "datashifts/sinkhorn.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace datashifts {

/// Numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;

  /// Column position of `name`; throws InvalidInput if absent.
  Eigen::Index column(const std::string& name) const;
};

/// Comma-separated, one header row, every cell a finite number. Blank lines
/// are skipped. `origin` names the input in error messages.
CsvTable read_csv(std::istream& in, const std::string& origin = "input");
CsvTable read_csv_file(const std::string& path);

/// Columns named in `label_columns` become labels (in that order); the rest
/// are covariates. An empty list yields an unlabeled sample.
LabeledSample sample_from_table(const CsvTable& table, const std::vector<std::string>& label_columns,
                                Domain domain = Domain::Source);

/// Header `row,col,mass`, one line per nonzero coupling entry.
void write_plan_csv(std::ostream& out, const TransportPlan& plan);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace datashifts
