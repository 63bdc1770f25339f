#pragma once

// CSV formats and atomic file output.
//
//   dataset     label,x1,...,xD        one row per point, label 1 = inlier
//   basis       x1,...,xD              one row per basis vector
//   signal      label,alpha
//   roc         fpr,tpr
//   grid        see grid_csv_header()
//   theory      see theory_csv_header()

#include "dpcp/datagen.hpp"
#include "dpcp/eval.hpp"
#include "dpcp/numerics.hpp"
#include "dpcp/theory.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace dpcp {

/// Writes `content` to a temporary file beside `path`, then renames it over
/// `path`, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  Index column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<Index>(i);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a numeric CSV with a header row.
inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path.string() + ": empty file");
  t.header = split_csv_line(line);
  Index lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " fields, got " +
                               std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string coordinate_header(Index dim) {
  std::string h;
  for (Index i = 1; i <= dim; ++i) h += (i > 1 ? ",x" : "x") + std::to_string(i);
  return h;
}

inline std::string dataset_csv(const Matrix& data, const std::vector<bool>& labels) {
  std::string s = "label," + coordinate_header(data.rows()) + "\n";
  for (Index j = 0; j < data.cols(); ++j) {
    s += labels[j] ? "1" : "0";
    for (Index i = 0; i < data.rows(); ++i) s += "," + format_double(data(i, j));
    s += "\n";
  }
  return s;
}

/// Basis vectors (matrix columns) written one per row.
inline std::string basis_csv(const Matrix& basis) {
  std::string s = coordinate_header(basis.rows()) + "\n";
  for (Index j = 0; j < basis.cols(); ++j) {
    for (Index i = 0; i < basis.rows(); ++i) s += (i ? "," : "") + format_double(basis(i, j));
    s += "\n";
  }
  return s;
}

struct LabeledData {
  Matrix data;
  std::vector<bool> labels;
  bool has_labels = false;
};

/// Reads a dataset CSV. The label column is optional; every other column is
/// a coordinate.
inline LabeledData read_dataset(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const Index label_col = t.column("label");
  const Index dim = static_cast<Index>(t.header.size()) - (label_col >= 0 ? 1 : 0);
  if (dim < 1) throw std::runtime_error(path.string() + ": no coordinate columns");
  LabeledData out;
  out.has_labels = label_col >= 0;
  out.data.resize(dim, static_cast<Index>(t.rows.size()));
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    Index i = 0;
    for (Index k = 0; k < static_cast<Index>(t.header.size()); ++k) {
      if (k == label_col) {
        out.labels.push_back(t.rows[j][k] == 1.0);
      } else {
        out.data(i++, static_cast<Index>(j)) = t.rows[j][k];
      }
    }
  }
  return out;
}

inline Matrix read_basis(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const Index dim = static_cast<Index>(t.header.size());
  Matrix b(dim, static_cast<Index>(t.rows.size()));
  for (std::size_t j = 0; j < t.rows.size(); ++j)
    for (Index i = 0; i < dim; ++i) b(i, static_cast<Index>(j)) = t.rows[j][i];
  return b;
}

inline std::string signal_csv(const Signal& sig) {
  std::string s = "label,alpha\n";
  for (std::size_t j = 0; j < sig.values.size(); ++j) {
    s += (j < sig.labels.size() && sig.labels[j] ? "1," : "0,") + format_double(sig.values[j]) + "\n";
  }
  return s;
}

inline Signal read_signal(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const Index lc = t.column("label");
  const Index ac = t.column("alpha");
  if (lc < 0 || ac < 0) throw std::runtime_error(path.string() + ": need columns label,alpha");
  Signal s;
  for (const auto& row : t.rows) {
    s.labels.push_back(row[lc] == 1.0);
    s.values.push_back(row[ac]);
  }
  return s;
}

inline std::string roc_csv(const RocResult& r) {
  std::string s = "fpr,tpr\n";
  for (const auto& p : r.points) s += format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
  return s;
}

inline const char* grid_csv_header() {
  return "D,d,N,M,ratio,sigma,trial,seed,method,separation,area_above,angle_deg,iterations,wall_ms,status";
}

inline std::string grid_csv(const std::vector<GridRecord>& records) {
  std::string s = std::string(grid_csv_header()) + "\n";
  for (const auto& r : records) {
    s += std::to_string(r.D) + "," + std::to_string(r.d) + "," + std::to_string(r.N) + "," +
         std::to_string(r.M) + "," + format_double(r.ratio) + "," + format_double(r.sigma) + "," +
         std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + r.method + "," +
         (r.separation ? "1" : "0") + "," + format_double(r.area_above) + "," +
         format_double(r.angle_deg) + "," + std::to_string(r.iterations) + "," +
         format_double(r.wall_ms) + "," + r.status + "\n";
  }
  return s;
}

inline const char* theory_csv_header() {
  return "D,d,N,M,trial,eps_O,eps_X,gamma,condition_holds,phi0_star";
}

/// phi0_star is written in degrees.
inline std::string theory_csv(const std::vector<TheoryRecord>& records) {
  std::string s = std::string(theory_csv_header()) + "\n";
  for (const auto& r : records) {
    const auto& c = r.conditions;
    s += std::to_string(r.D) + "," + std::to_string(r.d) + "," + std::to_string(r.N) + "," +
         std::to_string(r.M) + "," + std::to_string(r.trial) + "," + format_double(c.eps_O) + "," +
         format_double(c.eps_X) + "," + format_double(c.gamma) + "," +
         (c.condition_holds ? "1" : "0") + "," +
         format_double(c.phi0_star * 180.0 / std::numbers::pi) + "\n";
  }
  return s;
}

}  // namespace dpcp
