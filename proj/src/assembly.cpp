#include <algorithm>
#include <cmath>
#include <map>

#include "snpp/fem.hpp"

namespace snpp::fem {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

std::vector<QuadPoint> symmetric_rule(
    std::initializer_list<std::pair<double, double>> orbits3, double centroid_weight) {
  std::vector<QuadPoint> rule;
  if (centroid_weight > 0.0) rule.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, centroid_weight});
  for (const auto& [a, w] : orbits3) {
    const double b = 1.0 - 2.0 * a;
    rule.push_back({{a, a, b}, w});
    rule.push_back({{a, b, a}, w});
    rule.push_back({{b, a, a}, w});
  }
  return rule;
}

SparseMatrix from_triplets(int rows, int cols, const Triplets& trip) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

}  // namespace

const std::vector<QuadPoint>& triangle_rule(int degree) {
  static const std::vector<QuadPoint> d1{{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1.0}};
  static const std::vector<QuadPoint> d2 = symmetric_rule({{1.0 / 6.0, 1.0 / 3.0}}, 0.0);
  static const std::vector<QuadPoint> d4 = symmetric_rule(
      {{0.44594849091596488632, 0.22338158967801146570},
       {0.09157621350977074346, 0.10995174365532186764}},
      0.0);
  static const std::vector<QuadPoint> d5 = symmetric_rule(
      {{0.47014206410511508977, 0.13239415278850618074},
       {0.10128650732345633880, 0.12593918054482715260}},
      0.225);
  switch (degree) {
    case 0:
    case 1: return d1;
    case 2: return d2;
    case 3:
    case 4: return d4;
    case 5: return d5;
    default:
      throw Error(ErrorCode::InvalidArgument, "fem::triangle_rule",
                  "no rule for degree " + std::to_string(degree));
  }
}

P1Element p1_element(const mesh::TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.nodes[tri[0]];
  const Vec2& b = mesh.nodes[tri[1]];
  const Vec2& c = mesh.nodes[tri[2]];
  const double twice = (b - a).cross(c - a);
  P1Element el;
  el.area = 0.5 * twice;
  if (!(el.area >= 1e-14)) {
    throw Error(ErrorCode::DegenerateElement, "fem::p1_element",
                "triangle " + std::to_string(t) + " has area " + std::to_string(el.area));
  }
  // grad(lambda_k) = perp(opposite edge) / (2 area), rotated inward.
  const Vec2 e0 = c - b, e1 = a - c, e2 = b - a;
  el.grad[0] = Vec2{-e0.y, e0.x} * (1.0 / twice);
  el.grad[1] = Vec2{-e1.y, e1.x} * (1.0 / twice);
  el.grad[2] = Vec2{-e2.y, e2.x} * (1.0 / twice);
  return el;
}

// ---------------------------------------------------------------------------

P2Space build_p2_space(const mesh::TriMesh& mesh) {
  P2Space s;
  s.num_vertices = mesh.num_nodes();
  s.positions = mesh.nodes;
  std::map<std::pair<int, int>, int> edge_id;
  s.element_dofs.reserve(mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    std::array<int, 6> dofs{tri[0], tri[1], tri[2], 0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = edge_id.find(key);
      if (it == edge_id.end()) {
        const int id = s.num_vertices + static_cast<int>(s.edges.size());
        it = edge_id.emplace(key, id).first;
        s.edges.push_back(key);
        s.positions.push_back((mesh.nodes[a] + mesh.nodes[b]) * 0.5);
      }
      dofs[3 + k] = it->second;
    }
    s.element_dofs.push_back(dofs);
  }
  return s;
}

std::vector<int> p2_boundary_nodes(const mesh::TriMesh& mesh, const P2Space& space,
                                   mesh::BoundaryTag tag) {
  std::map<std::pair<int, int>, int> edge_id;
  for (std::size_t k = 0; k < space.edges.size(); ++k) {
    edge_id[space.edges[k]] = space.num_vertices + static_cast<int>(k);
  }
  std::vector<char> mark(space.positions.size(), 0);
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != tag) continue;
    mark[e.a] = mark[e.b] = 1;
    mark[edge_id.at({std::min(e.a, e.b), std::max(e.a, e.b)})] = 1;
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < mark.size(); ++i) {
    if (mark[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::pair<int, int>> p2_periodic_pairs(const mesh::TriMesh& mesh,
                                                   const P2Space& space) {
  std::vector<std::pair<int, int>> pairs = mesh.periodic_pairs;
  if (pairs.empty()) return pairs;
  // Edge nodes on opposite faces, matched by coordinate.
  constexpr double tol = 1e-12;
  std::vector<int> left, right, bottom, top;
  for (std::size_t k = 0; k < space.edges.size(); ++k) {
    const int id = space.num_vertices + static_cast<int>(k);
    const Vec2& p = space.positions[id];
    if (std::abs(p.x) <= tol) left.push_back(id);
    if (std::abs(p.x - 1.0) <= tol) right.push_back(id);
    if (std::abs(p.y) <= tol) bottom.push_back(id);
    if (std::abs(p.y - 1.0) <= tol) top.push_back(id);
  }
  auto by_y = [&](int a, int b) { return space.positions[a].y < space.positions[b].y; };
  auto by_x = [&](int a, int b) { return space.positions[a].x < space.positions[b].x; };
  std::sort(left.begin(), left.end(), by_y);
  std::sort(right.begin(), right.end(), by_y);
  std::sort(bottom.begin(), bottom.end(), by_x);
  std::sort(top.begin(), top.end(), by_x);
  if (left.size() != right.size() || bottom.size() != top.size()) {
    throw Error(ErrorCode::MeshGenerationFailure, "fem::p2_periodic_pairs",
                "edge nodes on opposite faces do not match");
  }
  for (std::size_t k = 0; k < left.size(); ++k) pairs.emplace_back(left[k], right[k]);
  for (std::size_t k = 0; k < bottom.size(); ++k) pairs.emplace_back(bottom[k], top[k]);
  return pairs;
}

std::array<double, 6> p2_values(const std::array<double, 3>& l) {
  return {l[0] * (2.0 * l[0] - 1.0), l[1] * (2.0 * l[1] - 1.0), l[2] * (2.0 * l[2] - 1.0),
          4.0 * l[0] * l[1],         4.0 * l[1] * l[2],         4.0 * l[2] * l[0]};
}

std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& l, const P1Element& el) {
  const auto& g = el.grad;
  return {g[0] * (4.0 * l[0] - 1.0),
          g[1] * (4.0 * l[1] - 1.0),
          g[2] * (4.0 * l[2] - 1.0),
          (g[0] * l[1] + g[1] * l[0]) * 4.0,
          (g[1] * l[2] + g[2] * l[1]) * 4.0,
          (g[2] * l[0] + g[0] * l[2]) * 4.0};
}

// ---------------------------------------------------------------------------

VectorField VectorField::zeros_p1(const mesh::TriMesh& mesh) {
  VectorField f;
  f.kind = FieldKind::P1;
  f.values.assign(mesh.nodes.size(), Vec2{});
  return f;
}

VectorField VectorField::constant_p0(const mesh::TriMesh& mesh, const Vec2& v) {
  VectorField f;
  f.kind = FieldKind::P0;
  f.values.assign(mesh.triangles.size(), v);
  return f;
}

void VectorField::check(const mesh::TriMesh& mesh, const char* op) const {
  std::size_t expected = 0;
  switch (kind) {
    case FieldKind::P0: expected = mesh.triangles.size(); break;
    case FieldKind::P1: expected = mesh.nodes.size(); break;
    case FieldKind::P1Disc: expected = 3 * mesh.triangles.size(); break;
    case FieldKind::P2:
      if (!p2 || p2->num_vertices != mesh.num_nodes() ||
          p2->element_dofs.size() != mesh.triangles.size()) {
        throw Error(ErrorCode::FieldMeshMismatch, op, "P2 field built on a different mesh");
      }
      expected = p2->positions.size();
      break;
  }
  if (values.size() != expected) {
    throw Error(ErrorCode::FieldMeshMismatch, op,
                "field has " + std::to_string(values.size()) + " values, mesh space needs " +
                    std::to_string(expected));
  }
}

Vec2 VectorField::eval(const mesh::TriMesh& mesh, int t, const std::array<double, 3>& l) const {
  switch (kind) {
    case FieldKind::P0: return values[t];
    case FieldKind::P1: {
      const auto& tri = mesh.triangles[t];
      return values[tri[0]] * l[0] + values[tri[1]] * l[1] + values[tri[2]] * l[2];
    }
    case FieldKind::P1Disc:
      return values[3 * t] * l[0] + values[3 * t + 1] * l[1] + values[3 * t + 2] * l[2];
    case FieldKind::P2: {
      const auto phi = p2_values(l);
      const auto& dofs = p2->element_dofs[t];
      Vec2 v;
      for (int k = 0; k < 6; ++k) v += values[dofs[k]] * phi[k];
      return v;
    }
  }
  return {};
}

bool VectorField::is_zero() const {
  return std::all_of(values.begin(), values.end(),
                     [](const Vec2& v) { return v.x == 0.0 && v.y == 0.0; });
}

Vector interpolate(const mesh::TriMesh& mesh, double (*f)(const Vec2&)) {
  return interpolate_fn(mesh, f);
}

std::vector<Vec2> gradient_p0(const mesh::TriMesh& mesh, const Vector& u) {
  std::vector<Vec2> g(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    g[t] = el.grad[0] * u[tri[0]] + el.grad[1] * u[tri[1]] + el.grad[2] * u[tri[2]];
  }
  return g;
}

VectorField recover_gradient(const mesh::TriMesh& mesh, const Vector& u) {
  const auto g = gradient_p0(mesh, u);
  VectorField out = VectorField::zeros_p1(mesh);
  std::vector<double> weight(mesh.nodes.size(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.triangle_area(t);
    for (int k = 0; k < 3; ++k) {
      out.values[mesh.triangles[t][k]] += g[t] * a;
      weight[mesh.triangles[t][k]] += a;
    }
  }
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (weight[i] > 0.0) out.values[i] = out.values[i] * (1.0 / weight[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

SparseMatrix assemble_stiffness(const mesh::TriMesh& mesh, const Tensor2& coeff) {
  const auto ev = coeff.sym_eigenvalues();
  if (!(ev[0] > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fem::assemble_stiffness",
                "coefficient tensor is not positive definite");
  }
  Triplets trip;
  trip.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const Vec2 cg = coeff.apply(el.grad[i]);
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(tri[j], tri[i], el.area * cg.dot(el.grad[j]));
      }
    }
  }
  return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
}

SparseMatrix assemble_stiffness(const mesh::TriMesh& mesh, double coeff) {
  return assemble_stiffness(mesh, Tensor2::scalar(coeff));
}

SparseMatrix assemble_mass(const mesh::TriMesh& mesh) {
  Triplets trip;
  trip.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(tri[i], tri[j], el.area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
}

Vector assemble_basis_integrals(const mesh::TriMesh& mesh) {
  Vector w = Vector::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = p1_element(mesh, t).area;
    for (int k = 0; k < 3; ++k) w[mesh.triangles[t][k]] += a / 3.0;
  }
  return w;
}

Vector assemble_boundary_load(const mesh::TriMesh& mesh, mesh::BoundaryTag tag, double value) {
  Vector b = Vector::Zero(mesh.num_nodes());
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != tag) continue;
    const double len = (mesh.nodes[e.b] - mesh.nodes[e.a]).norm();
    b[e.a] += 0.5 * value * len;
    b[e.b] += 0.5 * value * len;
  }
  return b;
}

Vector assemble_gradient_load(const mesh::TriMesh& mesh, const std::vector<Vec2>& f) {
  if (f.size() != mesh.triangles.size()) {
    throw Error(ErrorCode::FieldMeshMismatch, "fem::assemble_gradient_load", "need one vector per triangle");
  }
  Vector b = Vector::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    for (int k = 0; k < 3; ++k) b[mesh.triangles[t][k]] += el.area * f[t].dot(el.grad[k]);
  }
  return b;
}

SparseMatrix assemble_convection(const mesh::TriMesh& mesh, const VectorField& velocity,
                                 const std::optional<Drift>& drift) {
  const char* op = "fem::assemble_convection";
  velocity.check(mesh, op);
  if (drift && drift->potential && drift->potential->size() != mesh.num_nodes()) {
    throw Error(ErrorCode::FieldMeshMismatch, op, "drift potential lives on a different mesh");
  }
  const bool use_drift = drift && drift->potential && drift->scale != 0.0;
  Triplets trip;
  if (velocity.is_zero() && !use_drift) return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
  trip.reserve(9 * mesh.triangles.size());
  const auto& rule = triangle_rule(4);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    Vec2 drift_vel{};
    if (use_drift) {
      const Vector& phi = *drift->potential;
      const Vec2 g = el.grad[0] * phi[tri[0]] + el.grad[1] * phi[tri[1]] + el.grad[2] * phi[tri[2]];
      drift_vel = drift->coeff.apply(g) * (-drift->scale);
    }
    // w_j = integral of lambda_j * transport velocity over the element.
    std::array<Vec2, 3> w{};
    for (const auto& q : rule) {
      const Vec2 v = velocity.eval(mesh, t, q.bary) + drift_vel;
      for (int j = 0; j < 3; ++j) w[j] += v * (q.weight * el.area * q.bary[j]);
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], w[j].dot(el.grad[i]));
    }
  }
  return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
}

SparseMatrix assemble_lumped_mass(const mesh::TriMesh& mesh) {
  const Vector w = assemble_basis_integrals(mesh);
  Triplets trip;
  trip.reserve(w.size());
  for (int i = 0; i < w.size(); ++i) trip.emplace_back(i, i, w[i]);
  return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
}

SparseMatrix assemble_upwind_diffusion(const mesh::TriMesh& mesh, const VectorField& velocity,
                                       const std::optional<Drift>& drift, double diffusivity,
                                       double threshold) {
  const char* op = "fem::assemble_upwind_diffusion";
  velocity.check(mesh, op);
  if (!(diffusivity > 0.0)) throw Error(ErrorCode::InvalidArgument, op, "diffusivity must be positive");
  const bool use_drift = drift && drift->potential && drift->scale != 0.0;
  Triplets trip;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    Vec2 w = velocity.eval(mesh, t, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    if (use_drift) {
      const Vector& phi = *drift->potential;
      const Vec2 g = el.grad[0] * phi[tri[0]] + el.grad[1] * phi[tri[1]] + el.grad[2] * phi[tri[2]];
      w += drift->coeff.apply(g) * (-drift->scale);
    }
    double h = 0.0;
    for (int k = 0; k < 3; ++k) h = std::max(h, (mesh.nodes[tri[k]] - mesh.nodes[tri[(k + 1) % 3]]).norm());
    const double speed = w.norm();
    if (speed * h / (2.0 * diffusivity) <= threshold) continue;
    const double nu = 0.5 * speed * h;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], nu * el.area * el.grad[i].dot(el.grad[j]));
    }
  }
  return from_triplets(mesh.num_nodes(), mesh.num_nodes(), trip);
}

}  // namespace snpp::fem
