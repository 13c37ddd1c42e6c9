#include "snpp/io.hpp"

#include <iomanip>
#include <ostream>

#include "snpp/common.hpp"

namespace snpp::io {

namespace {

void check_size(std::size_t got, std::size_t want, const std::string& name) {
  if (got != want) {
    throw Error(ErrorCode::FieldMeshMismatch, "io::write_vtk", "field '" + name + "' has wrong size");
  }
}

std::string vtk_name(std::string s) {
  for (char& c : s) {
    if (c == ' ' || c == '\t') c = '_';
  }
  return s;
}

}  // namespace

void write_vtk(std::ostream& os, const mesh::TriMesh& m, const VtkFields& f, const std::string& title) {
  const std::size_t nn = m.nodes.size(), nt = m.triangles.size();
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nn << " double\n";
  for (const auto& p : m.nodes) os << p.x << ' ' << p.y << " 0\n";
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : m.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (std::size_t i = 0; i < nt; ++i) os << "5\n";

  if (!f.point_scalars.empty() || !f.point_vectors.empty()) {
    os << "POINT_DATA " << nn << '\n';
    for (const auto& [name, v] : f.point_scalars) {
      check_size(static_cast<std::size_t>(v->size()), nn, name);
      os << "SCALARS " << vtk_name(name) << " double 1\nLOOKUP_TABLE default\n";
      for (Eigen::Index i = 0; i < v->size(); ++i) os << (*v)[i] << '\n';
    }
    for (const auto& [name, v] : f.point_vectors) {
      check_size(v.size(), nn, name);
      os << "VECTORS " << vtk_name(name) << " double\n";
      for (const auto& x : v) os << x.x << ' ' << x.y << " 0\n";
    }
  }
  if (!f.cell_vectors.empty()) {
    os << "CELL_DATA " << nt << '\n';
    for (const auto& [name, v] : f.cell_vectors) {
      check_size(v.size(), nt, name);
      os << "VECTORS " << vtk_name(name) << " double\n";
      for (const auto& x : v) os << x.x << ' ' << x.y << " 0\n";
    }
  }
  if (!os) throw Error(ErrorCode::IoError, "io::write_vtk", "write failed");
}

std::vector<Vec2> vertex_values(const mesh::TriMesh& m, const fem::VectorField& v) {
  v.check(m, "io::vertex_values");
  std::vector<Vec2> out(m.nodes.size());
  switch (v.kind) {
    case fem::FieldKind::P1:
      return v.values;
    case fem::FieldKind::P2:
      // vertices come first in the P2 numbering
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.values[i];
      return out;
    default: {
      std::vector<double> w(out.size(), 0.0);
      for (int t = 0; t < m.num_triangles(); ++t) {
        const double a = m.triangle_area(t);
        for (int k = 0; k < 3; ++k) {
          std::array<double, 3> l{0.0, 0.0, 0.0};
          l[k] = 1.0;
          out[m.triangles[t][k]] += v.eval(m, t, l) * a;
          w[m.triangles[t][k]] += a;
        }
      }
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (w[i] > 0.0) out[i] = out[i] * (1.0 / w[i]);
      }
      return out;
    }
  }
}

std::vector<Vec2> cell_values(const mesh::TriMesh& m, const fem::VectorField& v) {
  v.check(m, "io::cell_values");
  std::vector<Vec2> out(m.triangles.size());
  const std::array<double, 3> c{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  for (int t = 0; t < m.num_triangles(); ++t) out[t] = v.eval(m, t, c);
  return out;
}

}  // namespace snpp::io
