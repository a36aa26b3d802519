#include "lsfem/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "lsfem/errors.hpp"

namespace lsfem {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw InvalidArgument("CsvTable: row width does not match the header");
  rows_.push_back(std::move(cells));
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(cells[i]);
    }
    out << "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
}

void CsvTable::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write(out);
}

void write_vtk(std::ostream& out, const Triangulation& m, const VtkCellData& data, const std::string& title) {
  const int nt = m.num_triangles();
  for (const auto& [name, v] : data.scalars) {
    if (static_cast<int>(v.size()) != nt) throw InvalidArgument("write_vtk: cell field '" + name + "' has wrong size");
  }
  for (const auto& [name, v] : data.vectors) {
    if (static_cast<int>(v.size()) != nt) throw InvalidArgument("write_vtk: cell field '" + name + "' has wrong size");
  }
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << m.num_vertices() << " double\n";
  for (const Point& p : m.vertices()) out << format_number(p.x) << ' ' << format_number(p.y) << " 0\n";
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const Triangle& t : m.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";
  if (data.scalars.empty() && data.vectors.empty()) return;
  out << "CELL_DATA " << nt << '\n';
  for (const auto& [name, v] : data.scalars) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : v) out << format_number(x) << '\n';
  }
  for (const auto& [name, v] : data.vectors) {
    out << "VECTORS " << name << " double\n";
    for (const Vec2& x : v) out << format_number(x.x) << ' ' << format_number(x.y) << " 0\n";
  }
}

void write_vtk_file(const std::string& path, const Triangulation& m, const VtkCellData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write_vtk(out, m, data);
}

VtkCellData cell_data(const DiscreteFields& f) {
  VtkCellData d;
  const Bary c{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  auto each_cell = [&](const Field& field, auto&& fn) {
    for (int t = 0; t < field.space->mesh().num_triangles(); ++t) fn(t, eval_field(field, t, c));
  };
  if (f.u.space) {
    auto& u = d.scalars["u"];
    each_cell(f.u, [&](int, const ShapeValue& s) { u.push_back(s.value); });
  }
  if (f.sigma.space) {
    auto& sig = d.vectors["sigma"];
    auto& div = d.scalars["div_sigma"];
    each_cell(f.sigma, [&](int, const ShapeValue& s) {
      sig.push_back(s.vec);
      div.push_back(s.div);
    });
  }
  if (f.phi.space) {
    auto& phi = d.vectors["phi"];
    each_cell(f.phi, [&](int, const ShapeValue& s) { phi.push_back(s.vec); });
  }
  return d;
}

}  // namespace lsfem
