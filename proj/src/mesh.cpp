#include "snpp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace snpp::mesh {

namespace {

constexpr double kCoordTol = 1e-12;

[[noreturn]] void fail(ErrorCode code, const char* op, const std::string& msg) {
  throw Error(code, std::string("mesh::") + op, msg);
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * (b - a).cross(c - a);
}

void check_disk(const UnitCellGeometry& geom, const char* op) {
  if (!(geom.target_h > 0.0)) fail(ErrorCode::InvalidArgument, op, "target_h must be positive");
  if (!geom.inclusion) return;
  const Disk& d = *geom.inclusion;
  if (!(d.radius > 0.0)) fail(ErrorCode::InvalidArgument, op, "disk radius must be positive");
  const bool inside = d.center.x - d.radius > 0.0 && d.center.x + d.radius < 1.0 &&
                      d.center.y - d.radius > 0.0 && d.center.y + d.radius < 1.0;
  if (!inside) {
    std::ostringstream os;
    os << "disk (center " << d.center.x << "," << d.center.y << ", radius " << d.radius
       << ") meets the cell boundary";
    fail(ErrorCode::InclusionTouchesBoundary, op, os.str());
  }
}

// Split quad (q00, q10, q11, q01) along one of its diagonals.
void push_quad(std::vector<std::array<int, 3>>& tris, int q00, int q10, int q11, int q01,
               bool diag_a) {
  if (diag_a) {
    tris.push_back({q00, q10, q11});
    tris.push_back({q00, q11, q01});
  } else {
    tris.push_back({q00, q10, q01});
    tris.push_back({q10, q11, q01});
  }
}

void orient_ccw(TriMesh& m) {
  for (auto& t : m.triangles) {
    if (signed_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]) < 0.0) std::swap(t[1], t[2]);
  }
}

// Orient boundary edges so that the adjacent triangle (and hence the fluid)
// lies to the left.
void orient_boundary_edges(TriMesh& m) {
  std::map<std::pair<int, int>, int> directed;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    for (int k = 0; k < 3; ++k) directed[{tri[k], tri[(k + 1) % 3]}] = t;
  }
  for (auto& e : m.boundary_edges) {
    if (directed.count({e.a, e.b})) continue;
    if (directed.count({e.b, e.a})) {
      std::swap(e.a, e.b);
      continue;
    }
    fail(ErrorCode::MeshGenerationFailure, "orient_boundary_edges",
         "boundary edge not attached to any triangle");
  }
}

// Pair nodes on opposite faces of the unit square by exact coordinate match.
void pair_unit_faces(TriMesh& m) {
  std::vector<int> left, right, bottom, top;
  for (int i = 0; i < m.num_nodes(); ++i) {
    const Vec2& p = m.nodes[i];
    if (std::abs(p.x) <= kCoordTol) left.push_back(i);
    if (std::abs(p.x - 1.0) <= kCoordTol) right.push_back(i);
    if (std::abs(p.y) <= kCoordTol) bottom.push_back(i);
    if (std::abs(p.y - 1.0) <= kCoordTol) top.push_back(i);
  }
  auto by_y = [&](int a, int b) { return m.nodes[a].y < m.nodes[b].y; };
  auto by_x = [&](int a, int b) { return m.nodes[a].x < m.nodes[b].x; };
  std::sort(left.begin(), left.end(), by_y);
  std::sort(right.begin(), right.end(), by_y);
  std::sort(bottom.begin(), bottom.end(), by_x);
  std::sort(top.begin(), top.end(), by_x);
  if (left.size() != right.size() || bottom.size() != top.size()) {
    fail(ErrorCode::MeshGenerationFailure, "pair_unit_faces", "opposite faces carry different node counts");
  }
  for (std::size_t k = 0; k < left.size(); ++k) {
    if (std::abs(m.nodes[left[k]].y - m.nodes[right[k]].y) > kCoordTol) {
      fail(ErrorCode::MeshGenerationFailure, "pair_unit_faces", "x-faces do not match");
    }
    m.periodic_pairs.emplace_back(left[k], right[k]);
  }
  for (std::size_t k = 0; k < bottom.size(); ++k) {
    if (std::abs(m.nodes[bottom[k]].x - m.nodes[top[k]].x) > kCoordTol) {
      fail(ErrorCode::MeshGenerationFailure, "pair_unit_faces", "y-faces do not match");
    }
    m.periodic_pairs.emplace_back(bottom[k], top[k]);
  }
}

int even_count(double length, double h) {
  int n = static_cast<int>(std::ceil(length / h - 1e-12));
  n = std::max(n, 2);
  if (n % 2 != 0) ++n;
  return n;
}

// Four structured blocks between the circle and the square sides, each
// transfinitely interpolated along straight spokes.
TriMesh disk_cell_mesh(const Disk& disk, double h) {
  const std::array<Vec2, 4> corners{Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}};
  const int n = even_count(1.0, h);

  auto side_point = [n](int block, int i) -> Vec2 {
    const double s = static_cast<double>(i) / n;
    const double r = static_cast<double>(n - i) / n;
    switch (block) {
      case 0: return {s, 0.0};
      case 1: return {1.0, s};
      case 2: return {r, 1.0};
      default: return {0.0, r};
    }
  };
  std::array<double, 5> theta{};
  for (int k = 0; k < 4; ++k) {
    const Vec2 d = corners[k] - disk.center;
    theta[k] = std::atan2(d.y, d.x);
  }
  for (int k = 1; k < 4; ++k) {
    while (theta[k] <= theta[k - 1]) theta[k] += 2.0 * kPi;
  }
  theta[4] = theta[0] + 2.0 * kPi;
  auto arc_point = [&](int block, int i) -> Vec2 {
    const double t = theta[block] + (theta[block + 1] - theta[block]) * i / n;
    return disk.center + Vec2{std::cos(t), std::sin(t)} * disk.radius;
  };

  double gap = 0.0;
  for (int b = 0; b < 4; ++b) {
    for (int i = 0; i <= n; ++i) gap = std::max(gap, (side_point(b, i) - arc_point(b, i)).norm());
  }
  const int layers = std::max(2, static_cast<int>(std::ceil(gap / h - 1e-12)));

  TriMesh m;
  auto lerp = [layers](const Vec2& c, const Vec2& s, int j) -> Vec2 {
    if (j == 0) return c;
    if (j == layers) return s;
    return c + (s - c) * (static_cast<double>(j) / layers);
  };
  // spoke[k][j]: nodes on the straight line from the circle to corner k.
  std::vector<std::vector<int>> spoke(4, std::vector<int>(layers + 1));
  for (int k = 0; k < 4; ++k) {
    const Vec2 c = disk.center +
                   Vec2{std::cos(theta[k]), std::sin(theta[k])} * disk.radius;
    for (int j = 0; j <= layers; ++j) {
      spoke[k][j] = m.num_nodes();
      m.nodes.push_back(j == layers ? corners[k] : lerp(c, corners[k], j));
    }
  }
  for (int b = 0; b < 4; ++b) {
    // idx(i, j) for this block; i = 0 and i = n reuse spokes.
    std::vector<std::vector<int>> idx(n + 1, std::vector<int>(layers + 1));
    for (int j = 0; j <= layers; ++j) {
      idx[0][j] = spoke[b][j];
      idx[n][j] = spoke[(b + 1) % 4][j];
    }
    for (int i = 1; i < n; ++i) {
      const Vec2 c = arc_point(b, i);
      const Vec2 s = side_point(b, i);
      for (int j = 0; j <= layers; ++j) {
        idx[i][j] = m.num_nodes();
        m.nodes.push_back(lerp(c, s, j));
      }
    }
    for (int i = 0; i < n; ++i) {
      const bool diag_a = 2 * i < n;
      for (int j = 0; j < layers; ++j) {
        push_quad(m.triangles, idx[i][j], idx[i + 1][j], idx[i + 1][j + 1], idx[i][j + 1], diag_a);
      }
      m.boundary_edges.push_back({idx[i][0], idx[i + 1][0], BoundaryTag::GammaInterior});
      m.boundary_edges.push_back({idx[i][layers], idx[i + 1][layers], BoundaryTag::OuterBoundary});
    }
  }
  orient_ccw(m);
  orient_boundary_edges(m);
  pair_unit_faces(m);
  return m;
}

TriMesh build_cell_mesh(const UnitCellGeometry& geom) {
  TriMesh m;
  if (!geom.inclusion) {
    const int n = even_count(1.0, geom.target_h);
    m = generate_rectangle_mesh(Rectangle{}, n, n);
    pair_unit_faces(m);
  } else {
    m = disk_cell_mesh(*geom.inclusion, geom.target_h);
  }
  m.validate();
  return m;
}

}  // namespace

double UnitCellGeometry::fluid_area() const {
  if (!inclusion) return 1.0;
  return 1.0 - kPi * inclusion->radius * inclusion->radius;
}

double UnitCellGeometry::interface_length() const {
  return inclusion ? 2.0 * kPi * inclusion->radius : 0.0;
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

Vec2 TriMesh::centroid(int t) const {
  const auto& tri = triangles[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) * (1.0 / 3.0);
}

double TriMesh::total_area() const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
  return a;
}

void TriMesh::validate() const {
  const char* op = "validate";
  for (int t = 0; t < num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      if (triangles[t][k] < 0 || triangles[t][k] >= num_nodes()) {
        fail(ErrorCode::MeshGenerationFailure, op, "triangle references a missing node");
      }
    }
    if (!(triangle_area(t) > 0.0)) {
      fail(ErrorCode::MeshGenerationFailure, op,
           "triangle " + std::to_string(t) + " has non-positive signed area");
    }
  }
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  std::map<std::pair<int, int>, int> bnd;
  for (const auto& e : boundary_edges) {
    bnd[{std::min(e.a, e.b), std::max(e.a, e.b)}] = 1;
  }
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) fail(ErrorCode::MeshGenerationFailure, op, "edge shared by more than two triangles");
    if (count == 1 && !bnd.count(edge)) {
      fail(ErrorCode::MeshGenerationFailure, op, "free edge missing from boundary edge list");
    }
    if (count == 2 && bnd.count(edge)) {
      fail(ErrorCode::MeshGenerationFailure, op, "interior edge tagged as boundary");
    }
  }
  std::vector<int> gamma_degree(nodes.size(), 0);
  for (const auto& e : boundary_edges) {
    if (e.tag != BoundaryTag::GammaInterior) continue;
    ++gamma_degree[e.a];
    ++gamma_degree[e.b];
  }
  for (int d : gamma_degree) {
    if (d != 0 && d != 2) fail(ErrorCode::MeshGenerationFailure, op, "interface edges are not closed curves");
  }
  for (const auto& [master, slave] : periodic_pairs) {
    const Vec2 d = nodes[slave] - nodes[master];
    if (std::abs(d.x - std::round(d.x)) > kCoordTol || std::abs(d.y - std::round(d.y)) > kCoordTol) {
      fail(ErrorCode::MeshGenerationFailure, op, "periodic pair is not a lattice translate");
    }
  }
}

int PerforatedDomain::cells_x() const { return static_cast<int>(std::lround(outer.width() / eps)); }
int PerforatedDomain::cells_y() const { return static_cast<int>(std::lround(outer.height() / eps)); }

void PerforatedDomain::validate() const {
  const char* op = "PerforatedDomain";
  if (!(eps > 0.0) || !(eps <= 1.0)) fail(ErrorCode::InvalidArgument, op, "eps must lie in (0, 1]");
  const double k = 1.0 / eps;
  if (std::abs(k - std::round(k)) > 1e-9) fail(ErrorCode::GridMisaligned, op, "eps must be 1/k for integer k");
  const double nx = outer.width() / eps;
  const double ny = outer.height() / eps;
  if (!(outer.width() > 0.0) || !(outer.height() > 0.0) || std::abs(nx - std::round(nx)) > 1e-9 ||
      std::abs(ny - std::round(ny)) > 1e-9) {
    fail(ErrorCode::GridMisaligned, op, "eps does not divide the side lengths of Omega");
  }
  UnitCellGeometry probe = cell;
  probe.target_h = 1.0;
  check_disk(probe, op);
}

int PerforatedMesh::hole_count() const { return count_interface_loops(mesh); }

TriMesh generate_unit_cell_mesh(const UnitCellGeometry& geom) {
  check_disk(geom, "generate_unit_cell_mesh");
  if (geom.inclusion && !(geom.target_h < 0.5 * geom.inclusion->radius)) {
    fail(ErrorCode::MeshGenerationFailure, "generate_unit_cell_mesh",
         "target_h must be below radius/2 to resolve the interface");
  }
  return build_cell_mesh(geom);
}

PerforatedMesh generate_perforated_mesh(const PerforatedDomain& dom, double target_h) {
  const char* op = "generate_perforated_mesh";
  dom.validate();
  if (!(target_h > 0.0)) fail(ErrorCode::InvalidArgument, op, "target_h must be positive");
  if (target_h > dom.eps / 4.0 * (1.0 + 1e-12)) {
    fail(ErrorCode::ResolutionTooCoarse, op, "target_h exceeds eps/4");
  }
  UnitCellGeometry cell = dom.cell;
  cell.target_h = target_h / dom.eps;
  PerforatedMesh out;
  out.cell_mesh = build_cell_mesh(cell);
  out.eps = dom.eps;
  out.outer = dom.outer;
  out.cells_x = dom.cells_x();
  out.cells_y = dom.cells_y();

  const TriMesh& cm = out.cell_mesh;
  const int nc = cm.num_nodes();
  std::vector<int> x_partner(nc, -1), y_partner(nc, -1);
  for (const auto& [master, slave] : cm.periodic_pairs) {
    const Vec2 d = cm.nodes[slave] - cm.nodes[master];
    if (std::abs(d.x - 1.0) <= kCoordTol && std::abs(d.y) <= kCoordTol) x_partner[master] = slave;
    if (std::abs(d.y - 1.0) <= kCoordTol && std::abs(d.x) <= kCoordTol) y_partner[master] = slave;
  }
  auto on_left = [&](int n) { return std::abs(cm.nodes[n].x) <= kCoordTol; };
  auto on_right = [&](int n) { return std::abs(cm.nodes[n].x - 1.0) <= kCoordTol; };
  auto on_bottom = [&](int n) { return std::abs(cm.nodes[n].y) <= kCoordTol; };
  auto on_top = [&](int n) { return std::abs(cm.nodes[n].y - 1.0) <= kCoordTol; };

  const int kx = out.cells_x, ky = out.cells_y;
  std::vector<int> gid(static_cast<std::size_t>(kx) * ky * nc, -1);
  auto g = [&](int a, int b, int n) -> int& {
    return gid[(static_cast<std::size_t>(b) * kx + a) * nc + n];
  };
  TriMesh& m = out.mesh;
  for (int b = 0; b < ky; ++b) {
    for (int a = 0; a < kx; ++a) {
      for (int n = 0; n < nc; ++n) {
        int id = -1;
        if (a > 0 && on_left(n)) {
          id = g(a - 1, b, x_partner[n]);
        } else if (b > 0 && on_bottom(n)) {
          id = g(a, b - 1, y_partner[n]);
        }
        if (id < 0) {
          id = m.num_nodes();
          const Vec2& y = cm.nodes[n];
          m.nodes.push_back(dom.outer.lo + Vec2{(a + y.x) * dom.eps, (b + y.y) * dom.eps});
          out.cell_node.push_back(n);
        }
        g(a, b, n) = id;
      }
      const int cell_id = a + kx * b;
      for (const auto& tri : cm.triangles) {
        m.triangles.push_back({g(a, b, tri[0]), g(a, b, tri[1]), g(a, b, tri[2])});
        out.triangle_cell.push_back(cell_id);
      }
      for (const auto& e : cm.boundary_edges) {
        if (e.tag == BoundaryTag::GammaInterior) {
          m.boundary_edges.push_back({g(a, b, e.a), g(a, b, e.b), BoundaryTag::GammaInterior});
          continue;
        }
        const bool outer = (a == 0 && on_left(e.a) && on_left(e.b)) ||
                           (a == kx - 1 && on_right(e.a) && on_right(e.b)) ||
                           (b == 0 && on_bottom(e.a) && on_bottom(e.b)) ||
                           (b == ky - 1 && on_top(e.a) && on_top(e.b));
        if (outer) m.boundary_edges.push_back({g(a, b, e.a), g(a, b, e.b), BoundaryTag::OuterBoundary});
      }
    }
  }
  m.validate();
  return out;
}

TriMesh generate_rectangle_mesh(const Rectangle& rect, int nx, int ny) {
  if (nx < 1 || ny < 1) fail(ErrorCode::InvalidArgument, "generate_rectangle_mesh", "need nx, ny >= 1");
  TriMesh m;
  auto id = [nx](int i, int j) { return i + (nx + 1) * j; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? rect.hi.x : rect.lo.x + rect.width() * i / nx;
      const double y = j == ny ? rect.hi.y : rect.lo.y + rect.height() * j / ny;
      m.nodes.push_back({x, y});
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const bool diag_a = (2 * i < nx) != (2 * j < ny);
      push_quad(m.triangles, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), diag_a);
    }
  }
  for (int i = 0; i < nx; ++i) {
    m.boundary_edges.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::OuterBoundary});
    m.boundary_edges.push_back({id(i + 1, ny), id(i, ny), BoundaryTag::OuterBoundary});
  }
  for (int j = 0; j < ny; ++j) {
    m.boundary_edges.push_back({id(nx, j), id(nx, j + 1), BoundaryTag::OuterBoundary});
    m.boundary_edges.push_back({id(0, j + 1), id(0, j), BoundaryTag::OuterBoundary});
  }
  orient_ccw(m);
  orient_boundary_edges(m);
  return m;
}

QualityReport mesh_quality_report(const TriMesh& mesh) {
  QualityReport q;
  q.min_angle_deg = 180.0;
  q.h_min = std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.triangles) {
    const Vec2& a = mesh.nodes[tri[0]];
    const Vec2& b = mesh.nodes[tri[1]];
    const Vec2& c = mesh.nodes[tri[2]];
    const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
    const std::array<double, 3> len{la, lb, lc};
    auto angle = [](double opp, double s1, double s2) {
      const double cosv = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
      return std::acos(cosv) * 180.0 / kPi;
    };
    q.min_angle_deg = std::min({q.min_angle_deg, angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
    const double area = std::abs(signed_area(a, b, c));
    const double s = 0.5 * (la + lb + lc);
    const double inradius = area / s;
    const double circumradius = la * lb * lc / (4.0 * area);
    q.max_aspect_ratio = std::max(q.max_aspect_ratio, circumradius / (2.0 * inradius));
    q.h_max = std::max(q.h_max, *std::max_element(len.begin(), len.end()));
    q.h_min = std::min(q.h_min, *std::min_element(len.begin(), len.end()));
  }
  return q;
}

int count_interface_loops(const TriMesh& mesh) {
  std::vector<int> parent(mesh.nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<char> used(mesh.nodes.size(), 0);
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != BoundaryTag::GammaInterior) continue;
    used[e.a] = used[e.b] = 1;
    parent[find(e.a)] = find(e.b);
  }
  int loops = 0;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (used[i] && find(static_cast<int>(i)) == static_cast<int>(i)) ++loops;
  }
  return loops;
}

std::array<double, 3> barycentric(const TriMesh& mesh, int t, const Vec2& p) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.nodes[tri[0]];
  const Vec2& b = mesh.nodes[tri[1]];
  const Vec2& c = mesh.nodes[tri[2]];
  const double area = signed_area(a, b, c);
  const double l1 = signed_area(a, p, c) / area;
  const double l2 = signed_area(a, b, p) / area;
  return {1.0 - l1 - l2, l1, l2};
}

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh) {
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const auto& p : mesh.nodes) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.num_triangles())) / 2));
  nx_ = ny_ = side;
  lo_ = lo;
  cell_w_ = std::max(hi.x - lo.x, 1e-300) / nx_;
  cell_h_ = std::max(hi.y - lo.y, 1e-300) / ny_;
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Vec2 tlo{1e300, 1e300}, thi{-1e300, -1e300};
    for (int k = 0; k < 3; ++k) {
      const Vec2& p = mesh.nodes[mesh.triangles[t][k]];
      tlo = {std::min(tlo.x, p.x), std::min(tlo.y, p.y)};
      thi = {std::max(thi.x, p.x), std::max(thi.y, p.y)};
    }
    const int i0 = std::clamp(static_cast<int>((tlo.x - lo_.x) / cell_w_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((thi.x - lo_.x) / cell_w_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((tlo.y - lo_.y) / cell_h_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((thi.y - lo_.y) / cell_h_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
    }
  }
}

std::optional<std::pair<int, std::array<double, 3>>> PointLocator::locate(const Vec2& p,
                                                                           double tol) const {
  const int i = static_cast<int>(std::floor((p.x - lo_.x) / cell_w_));
  const int j = static_cast<int>(std::floor((p.y - lo_.y) / cell_h_));
  if (i < -1 || j < -1 || i > nx_ || j > ny_) return std::nullopt;
  // The owning bucket first, then its neighbours for points on bucket seams.
  for (int ring = 0; ring <= 1; ++ring) {
    for (int dj = -ring; dj <= ring; ++dj) {
      for (int di = -ring; di <= ring; ++di) {
        if (ring == 1 && di == 0 && dj == 0) continue;
        const int ic = std::clamp(i + di, 0, nx_ - 1), jc = std::clamp(j + dj, 0, ny_ - 1);
        for (int t : buckets_[static_cast<std::size_t>(jc) * nx_ + ic]) {
          const auto l = barycentric(*mesh_, t, p);
          if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol) return std::make_pair(t, l);
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace snpp::mesh
