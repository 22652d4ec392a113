#include "alo/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "alo/error.hpp"

namespace alo {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::io_error, "cannot write '" + path + "'");
  return os;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse_error, path + ": empty file");
  ++lineno;
  for (auto& h : split_fields(line)) t.header.push_back(trim(h));
  const std::size_t cols = t.header.size();
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols) {
      throw Error(ErrorKind::parse_error, path + ":" + std::to_string(lineno) + ": expected " +
                                              std::to_string(cols) + " fields, found " +
                                              std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v)) {
        throw Error(ErrorKind::parse_error, path + ":" + std::to_string(lineno) + ": column " +
                                                std::to_string(c + 1) + ": not a number: '" +
                                                trim(fields[c]) + "'");
      }
      data.push_back(v);
    }
    ++rows;
  }
  t.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      t.values(static_cast<Index>(r), static_cast<Index>(c)) = data[r * cols + c];
    }
  }
  return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows) {
  std::ofstream os = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) os << (c ? "," : "") << format_double(rows(r, c));
    os << '\n';
  }
  if (!os) throw Error(ErrorKind::io_error, "write failed for '" + path + "'");
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os = open_out(path);
  auto emit = [&os](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) os << (c ? "," : "") << cells[c];
    os << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  if (!os) throw Error(ErrorKind::io_error, "write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& path, const std::string& y_path) {
  const CsvTable t = read_csv(path);
  Dataset d;
  if (y_path.empty()) {
    if (t.values.cols() < 2) {
      throw Error(ErrorKind::parse_error, path + ": need at least one feature column and a response");
    }
    d.X = t.values.leftCols(t.values.cols() - 1);
    d.y = t.values.col(t.values.cols() - 1);
  } else {
    const CsvTable ty = read_csv(y_path);
    if (ty.values.cols() != 1) throw Error(ErrorKind::parse_error, y_path + ": expected one column");
    if (ty.values.rows() != t.values.rows()) {
      throw Error(ErrorKind::parse_error, y_path + ": row count differs from " + path);
    }
    d.X = t.values;
    d.y = ty.values.col(0);
  }
  return d;
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::vector<std::string> header;
  for (Index l = 0; l < data.p(); ++l) header.push_back("x" + std::to_string(l + 1));
  header.emplace_back("y");
  Eigen::MatrixXd rows(data.n(), data.p() + 1);
  rows << data.X, data.y;
  write_csv(path, header, rows);
}

std::string shape_path(const std::string& path) { return path + ".shape"; }

MatrixDataset read_matrix_dataset(const std::string& path, const std::string& y_path) {
  const std::string sp = shape_path(path);
  std::ifstream in(sp);
  if (!in) throw Error(ErrorKind::io_error, "cannot open shape file '" + sp + "'");
  MatrixDataset m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    double v = 0.0;
    if (eq == std::string::npos || !parse_number(t.substr(eq + 1), v) || v < 1 || v != std::floor(v)) {
      throw Error(ErrorKind::parse_error, sp + ":" + std::to_string(lineno) + ": expected p1=<int> or p2=<int>");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key == "p1") {
      m.p1 = static_cast<Index>(v);
    } else if (key == "p2") {
      m.p2 = static_cast<Index>(v);
    } else {
      throw Error(ErrorKind::parse_error, sp + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  const Dataset d = read_dataset(path, y_path);
  m.X = d.X;
  m.y = d.y;
  m.validate();
  return m;
}

void write_matrix_dataset(const std::string& path, const MatrixDataset& data) {
  write_dataset(path, Dataset{data.X, data.y});
  std::ofstream os = open_out(shape_path(path));
  os << "p1=" << data.p1 << "\np2=" << data.p2 << "\n";
}

}  // namespace alo
