#pragma once

// CSV tables and legacy ASCII VTK output.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lsfem/assembly.hpp"
#include "lsfem/mesh.hpp"

namespace lsfem {

/// Number formatting shared by every table: %.12g, "nan"/"inf" spelled out.
std::string format_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  /// Row size must match the header.
  void add_row(std::vector<std::string> cells);

  /// RFC 4180: fields containing ',', '"', CR or LF are quoted, quotes doubled;
  /// lines end in CRLF.
  void write(std::ostream& out) const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(const std::string& field);

struct VtkCellData {
  std::map<std::string, std::vector<double>> scalars;
  std::map<std::string, std::vector<Vec2>> vectors;
};

/// UNSTRUCTURED_GRID of triangles with per-cell data.
void write_vtk(std::ostream& out, const Triangulation& m, const VtkCellData& data, const std::string& title = "lsfem");
void write_vtk_file(const std::string& path, const Triangulation& m, const VtkCellData& data);

/// Cell-centroid values of the discrete fields (u, sigma, phi) for VTK output.
VtkCellData cell_data(const DiscreteFields& f);

}  // namespace lsfem
