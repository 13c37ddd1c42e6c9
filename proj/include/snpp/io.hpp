#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "snpp/fem.hpp"
#include "snpp/mesh.hpp"

namespace snpp::io {

/// Fields attached to a VTK snapshot. Point data must have one entry per
/// mesh node, cell data one per triangle.
struct VtkFields {
  std::vector<std::pair<std::string, const fem::Vector*>> point_scalars;
  std::vector<std::pair<std::string, std::vector<Vec2>>> point_vectors;
  std::vector<std::pair<std::string, std::vector<Vec2>>> cell_vectors;
};

/// Legacy ASCII VTK 3.0 unstructured grid.
void write_vtk(std::ostream& os, const mesh::TriMesh& mesh, const VtkFields& fields,
               const std::string& title = "snpp");

/// Velocity field sampled at mesh vertices (P1/P2) or per triangle (P0/P1Disc averaged).
std::vector<Vec2> vertex_values(const mesh::TriMesh& mesh, const fem::VectorField& v);
std::vector<Vec2> cell_values(const mesh::TriMesh& mesh, const fem::VectorField& v);

}  // namespace snpp::io
