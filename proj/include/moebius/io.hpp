#pragma once

// CSV curve interchange and report helpers for the command-line tools.
//
// Curve CSV format: header `t,<coords>`, one row per sample, `.` decimal
// separator. Coordinate column names select the ambient space:
//   x1..xn   Euclidean points of R^n
//   p0..pn   points of S^n in R^{n+1} coordinates
//   q0..q{n+1}  homogeneous light-cone coordinates

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "moebius/models.hpp"

namespace moebius {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) t.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.header.size())
      throw std::runtime_error("ragged csv row in " + path);
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty() || t.rows.empty()) throw std::runtime_error("empty csv " + path);
  return t;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? ',' : '\n');
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) out << r[i] << (i + 1 < r.size() ? ',' : '\n');
}

inline SampledCurve sampled_curve_from_csv(const CsvTable& t, bool closed = false) {
  detail::require(t.header.size() >= 3 && t.header[0] == "t",
                  "curve csv: expected header t,<coords>");
  SampledCurve sc;
  const std::size_t m = t.header.size() - 1;
  const char tag = t.header[1].empty() ? 'x' : t.header[1][0];
  switch (tag) {
    case 'x':
      sc.ambient = Ambient::Euclidean;
      sc.sphere_dim = static_cast<int>(m);
      break;
    case 'p':
      sc.ambient = Ambient::Sphere;
      sc.sphere_dim = static_cast<int>(m) - 1;
      break;
    case 'q':
      sc.ambient = Ambient::LightCone;
      sc.sphere_dim = static_cast<int>(m) - 2;
      break;
    default:
      throw std::invalid_argument("curve csv: coordinate columns must be x*, p* or q*");
  }
  for (const auto& r : t.rows) {
    sc.ts.push_back(r[0]);
    Vec p(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) p(static_cast<Eigen::Index>(i)) = r[i + 1];
    sc.points.push_back(p);
  }
  sc.closed = closed;
  return sc;
}

inline void write_curve_csv(const std::string& path, const Curve& c,
                            const std::vector<double>& grid) {
  std::vector<std::string> header{"t"};
  const char* prefix = c.ambient() == Ambient::Euclidean ? "x"
                       : c.ambient() == Ambient::Sphere  ? "p"
                                                         : "q";
  const int base = c.ambient() == Ambient::Euclidean ? 1 : 0;
  for (int i = 0; i < c.coord_dim(); ++i)
    header.push_back(prefix + std::to_string(i + base));
  std::vector<std::vector<double>> rows;
  for (double t : grid) {
    Vec p = c.point(t);
    if (c.ambient() == Ambient::LightCone) p /= p(0) + p(p.size() - 1);  // v^0+v^{n+1} = 1
    std::vector<double> row{t};
    for (int i = 0; i < p.size(); ++i) row.push_back(p(i));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace moebius
