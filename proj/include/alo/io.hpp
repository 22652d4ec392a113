#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alo/solvers.hpp"

namespace alo {

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Numeric CSV with a header line. Malformed rows throw Error{parse_error}
/// naming the file, line and column; unreadable files throw Error{io_error}.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows);

/// Mixed text/number table; cells are written verbatim.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

/// 17 significant digits, so values survive a text round trip.
std::string format_double(double v);

/// Design matrix with the response as its last column, or as the only
/// column of a separate file when y_path is non-empty.
Dataset read_dataset(const std::string& path, const std::string& y_path = "");
void write_dataset(const std::string& path, const Dataset& data);

/// Matrix-sensing data: flattened observations (row-major) plus a sidecar
/// `<path>.shape` holding `p1=<rows>` and `p2=<cols>`.
MatrixDataset read_matrix_dataset(const std::string& path, const std::string& y_path = "");
void write_matrix_dataset(const std::string& path, const MatrixDataset& data);

std::string shape_path(const std::string& path);

}  // namespace alo
