#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "snpp/common.hpp"

namespace snpp::mesh {

struct Disk {
  Vec2 center{0.5, 0.5};
  double radius = 0.25;
};

/// Periodic unit cell Y = (0,1)^2 with an optional solid disk inclusion.
struct UnitCellGeometry {
  std::optional<Disk> inclusion;
  double target_h = 0.05;

  bool has_inclusion() const { return inclusion.has_value(); }
  /// Analytic fluid area |Y_l|.
  double fluid_area() const;
  /// Analytic length of the fluid/solid interface.
  double interface_length() const;
};

enum class BoundaryTag { GammaInterior, OuterBoundary };

/// Boundary edge oriented so that the fluid lies on its left.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::OuterBoundary;
};

struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  /// (master, slave); slave = master + lattice vector.
  std::vector<std::pair<int, int>> periodic_pairs;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double triangle_area(int t) const;
  Vec2 centroid(int t) const;
  double total_area() const;
  /// Throws MeshGenerationFailure if an invariant is broken.
  void validate() const;
};

struct Rectangle {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{1.0, 1.0};
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

/// Omega tiled by eps-scaled copies of the unit cell.
struct PerforatedDomain {
  Rectangle outer;
  double eps = 1.0;
  UnitCellGeometry cell;

  int cells_x() const;
  int cells_y() const;
  /// Throws GridMisaligned / InclusionTouchesBoundary on violated invariants.
  void validate() const;
};

/// Perforated mesh plus the tiling bookkeeping needed to relate micro nodes
/// back to the unit cell.
struct PerforatedMesh {
  TriMesh mesh;
  TriMesh cell_mesh;
  double eps = 1.0;
  Rectangle outer;
  int cells_x = 1;
  int cells_y = 1;
  /// Unit-cell node index for each micro node.
  std::vector<int> cell_node;
  /// Flat cell index (ix + cells_x * iy) of each micro triangle.
  std::vector<int> triangle_cell;

  int hole_count() const;
};

TriMesh generate_unit_cell_mesh(const UnitCellGeometry& geom);
PerforatedMesh generate_perforated_mesh(const PerforatedDomain& dom, double target_h);
/// Structured triangulation of a rectangle with nx * ny squares.
TriMesh generate_rectangle_mesh(const Rectangle& rect, int nx, int ny);

struct QualityReport {
  double min_angle_deg = 0.0;
  double max_aspect_ratio = 0.0;
  double h_max = 0.0;
  double h_min = 0.0;
};

QualityReport mesh_quality_report(const TriMesh& mesh);

/// Number of closed GammaInterior loops.
int count_interface_loops(const TriMesh& mesh);

/// Uniform-bucket point locator.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh);
  /// Triangle containing p and its barycentric coordinates, if any.
  std::optional<std::pair<int, std::array<double, 3>>> locate(const Vec2& p,
                                                               double tol = 1e-10) const;

 private:
  const TriMesh* mesh_;
  Vec2 lo_{};
  double cell_w_ = 1.0;
  double cell_h_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

std::array<double, 3> barycentric(const TriMesh& mesh, int t, const Vec2& p);

}  // namespace snpp::mesh
