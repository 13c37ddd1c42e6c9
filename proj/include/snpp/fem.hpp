#pragma once

#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "snpp/common.hpp"
#include "snpp/mesh.hpp"

namespace snpp::fem {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Quadrature and element geometry

struct QuadPoint {
  std::array<double, 3> bary;
  double weight;  // weights sum to 1; multiply by the triangle area
};

/// Symmetric Gauss rules on the reference triangle, exact for the given degree
/// (supported: 1, 2, 4, 5).
const std::vector<QuadPoint>& triangle_rule(int degree);

/// P1 element data: area and gradients of the barycentric basis functions.
struct P1Element {
  double area = 0.0;
  std::array<Vec2, 3> grad{};
};

/// Throws DegenerateElement if the area is below 1e-14.
P1Element p1_element(const mesh::TriMesh& mesh, int t);

// ---------------------------------------------------------------------------
// P2 topology (Taylor-Hood velocity space)

/// Quadratic Lagrange nodes: mesh vertices first, then one node per edge.
/// Local order per triangle: v0, v1, v2, e01, e12, e20.
struct P2Space {
  int num_vertices = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::array<int, 6>> element_dofs;
  std::vector<Vec2> positions;

  int size() const { return static_cast<int>(positions.size()); }
};

P2Space build_p2_space(const mesh::TriMesh& mesh);
/// P2 nodes lying on boundary edges with the given tag.
std::vector<int> p2_boundary_nodes(const mesh::TriMesh& mesh, const P2Space& space,
                                   mesh::BoundaryTag tag);
/// Periodic (master, slave) pairs for P2 nodes, from the mesh's vertex pairs.
std::vector<std::pair<int, int>> p2_periodic_pairs(const mesh::TriMesh& mesh,
                                                   const P2Space& space);

/// Values and gradients of the six P2 basis functions.
std::array<double, 6> p2_values(const std::array<double, 3>& l);
std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& l, const P1Element& el);

// ---------------------------------------------------------------------------
// Fields

enum class FieldKind { P0, P1, P1Disc, P2 };

/// Vector-valued finite element field. P0: one value per triangle; P1: per
/// vertex; P1Disc: three per triangle (local vertex order); P2: per P2 node.
struct VectorField {
  FieldKind kind = FieldKind::P1;
  std::vector<Vec2> values;
  std::shared_ptr<const P2Space> p2;

  static VectorField zeros_p1(const mesh::TriMesh& mesh);
  static VectorField constant_p0(const mesh::TriMesh& mesh, const Vec2& v);

  /// Throws FieldMeshMismatch if sizes disagree with the mesh.
  void check(const mesh::TriMesh& mesh, const char* op) const;
  Vec2 eval(const mesh::TriMesh& mesh, int t, const std::array<double, 3>& bary) const;
  bool is_zero() const;
};

Vector interpolate(const mesh::TriMesh& mesh, double (*f)(const Vec2&));
template <class F>
Vector interpolate_fn(const mesh::TriMesh& mesh, F&& f) {
  Vector u(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) u[i] = f(mesh.nodes[i]);
  return u;
}

/// Elementwise gradient of a P1 field.
std::vector<Vec2> gradient_p0(const mesh::TriMesh& mesh, const Vector& u);
/// Area-weighted nodal average of the elementwise gradient.
VectorField recover_gradient(const mesh::TriMesh& mesh, const Vector& u);

// ---------------------------------------------------------------------------
// Assembly

SparseMatrix assemble_stiffness(const mesh::TriMesh& mesh, const Tensor2& coeff);
SparseMatrix assemble_stiffness(const mesh::TriMesh& mesh, double coeff = 1.0);
SparseMatrix assemble_mass(const mesh::TriMesh& mesh);
/// Row-sum lumped mass (diagonal); same row sums as assemble_mass.
SparseMatrix assemble_lumped_mass(const mesh::TriMesh& mesh);
/// w_i = integral of the i-th P1 basis function (= M 1).
Vector assemble_basis_integrals(const mesh::TriMesh& mesh);
/// b_i = value * integral over edges with the tag of the i-th basis function.
Vector assemble_boundary_load(const mesh::TriMesh& mesh, mesh::BoundaryTag tag, double value);
/// b_i = integral of f . grad(phi_i) for an elementwise-constant vector f.
Vector assemble_gradient_load(const mesh::TriMesh& mesh, const std::vector<Vec2>& f);

/// Drift contribution to the transport velocity: -scale * coeff * grad(potential).
struct Drift {
  const Vector* potential = nullptr;
  Tensor2 coeff = Tensor2::identity();
  double scale = 0.0;
};

/// (B c)_i = integral of c_h (v - scale * coeff grad(potential)) . grad(phi_i).
SparseMatrix assemble_convection(const mesh::TriMesh& mesh, const VectorField& velocity,
                                 const std::optional<Drift>& drift = std::nullopt);

/// First-order upwinding as elementwise artificial diffusion |w| h / 2, added
/// only where the cell Peclet number |w| h / (2 diffusivity) exceeds `threshold`.
SparseMatrix assemble_upwind_diffusion(const mesh::TriMesh& mesh, const VectorField& velocity,
                                       const std::optional<Drift>& drift, double diffusivity,
                                       double threshold = 2.0);

// ---------------------------------------------------------------------------
// Constraints

/// A linear system together with the map from its unknowns back to the
/// original degrees of freedom. Constraints compose in any order except that a
/// zero-mean multiplier must be the last one applied.
struct ConstrainedSystem {
  SparseMatrix matrix;
  Vector rhs;
  int num_full = 0;
  /// Original dof -> current unknown, or -1 if eliminated by Dirichlet.
  std::vector<int> full_to_current;
  /// Prescribed values of eliminated dofs (zero elsewhere).
  Vector fixed_values;
  bool has_dirichlet = false;
  bool has_zero_mean = false;

  int num_unknowns() const { return static_cast<int>(rhs.size()); }
  /// Expand a solution of the reduced system to the original dofs.
  Vector expand(const Vector& x) const;
  /// Restrict a full vector (sum of merged entries, dropping fixed ones).
  Vector restrict_sum(const Vector& full) const;
};

ConstrainedSystem make_system(SparseMatrix matrix, Vector rhs);
/// Merge slave dofs into their masters (pairs in original numbering).
ConstrainedSystem apply_periodic(ConstrainedSystem sys,
                                 const std::vector<std::pair<int, int>>& pairs);
/// Symmetric elimination of prescribed dofs (original numbering).
ConstrainedSystem apply_dirichlet(ConstrainedSystem sys, const std::vector<int>& nodes,
                                  const std::vector<double>& values);
/// Augment with one Lagrange multiplier enforcing sum_i w_i u_i = 0, where
/// `weights` are per original dof (typically basis integrals).
ConstrainedSystem apply_zero_mean(ConstrainedSystem sys, const Vector& weights);

// ---------------------------------------------------------------------------
// Solvers

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients.
/// Errors: SolverBreakdown (non-positive curvature or residual stagnation),
/// MaxIterationsExceeded.
Vector solve_spd(const SparseMatrix& a, const Vector& b, double tol = 1e-10, int max_iter = 0,
                 SolveStats* stats = nullptr);

/// Sparse LU. Throws SolverBreakdown if the factorization fails.
Vector solve_direct(const SparseMatrix& a, const Vector& b);

/// Solve a constrained system and expand the result.
Vector solve_constrained(const ConstrainedSystem& sys, bool spd = false, double tol = 1e-10);

/// A constrained operator factored once and solved for many right-hand sides.
/// `sys` must be built from a zero rhs, so its rhs holds only Dirichlet lifting.
class FactoredSystem {
 public:
  explicit FactoredSystem(ConstrainedSystem sys, bool spd = false);
  ~FactoredSystem();
  FactoredSystem(FactoredSystem&&) noexcept;
  FactoredSystem& operator=(FactoredSystem&&) noexcept;

  /// Solve with a full-length load vector; returns the expanded solution.
  Vector solve(const Vector& full_rhs) const;
  const ConstrainedSystem& system() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// (M + dt A) c_new = M c + dt b.
Vector step_implicit(const SparseMatrix& mass, const SparseMatrix& op, const Vector& state,
                     double dt, const Vector& rhs, bool spd = false);

// ---------------------------------------------------------------------------
// Two-species transport

/// Data for one implicit step of the charged-species pair
///   w dc/dt - div(D grad c - c (v -/+ s Dd grad Phi)) = w R,  R+- = -/+(c+ - c-),
/// no-flux on every boundary, lumped mass for time derivative and reaction.
struct SpeciesStep {
  const mesh::TriMesh* mesh = nullptr;
  double weight = 1.0;  // porosity factor w
  Tensor2 diffusion = Tensor2::identity();
  const VectorField* velocity = nullptr;  // nullptr = no convection
  const Vector* potential = nullptr;      // nullptr = no drift
  Tensor2 drift_coeff = Tensor2::identity();
  double drift_scale = 0.0;  // s >= 0; c+ gets +s, c- gets -s
  bool upwind = false;
};

/// Reaction is implicit, so the step is one coupled 2n x 2n linear solve.
/// Total mass 1^T M (c+ + c-) is preserved up to the solver residual.
std::pair<Vector, Vector> step_species(const SpeciesStep& step, const Vector& c_plus, const Vector& c_minus,
                                       double dt);

// ---------------------------------------------------------------------------
// Stokes (Taylor-Hood P2/P1)

struct StokesBoundary {
  std::vector<mesh::BoundaryTag> no_slip;
  bool periodic = false;
};

enum class StokesMethod { Auto, Direct, Uzawa };

struct StokesSolution {
  VectorField velocity;  // P2
  Vector pressure;       // P1, zero mean
  double divergence_residual = 0.0;
  int iterations = 0;
};

/// Pre-assembled and pre-factored Stokes operator -visc Lap v + grad p = f,
/// div v = 0; repeated solves only change the forcing.
class StokesSolver {
 public:
  StokesSolver(const mesh::TriMesh& mesh, double viscosity, const StokesBoundary& bc,
               StokesMethod method = StokesMethod::Auto);
  ~StokesSolver();
  StokesSolver(StokesSolver&&) noexcept;
  StokesSolver& operator=(StokesSolver&&) noexcept;

  StokesSolution solve(const VectorField& forcing) const;
  int num_dofs() const;
  bool uses_uzawa() const;
  const std::shared_ptr<const P2Space>& space() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StokesSolution solve_stokes(const mesh::TriMesh& mesh, const VectorField& forcing,
                            const StokesBoundary& bc, double viscosity = 1.0,
                            StokesMethod method = StokesMethod::Auto);

/// Integral of each velocity component over the mesh.
Vec2 integrate_velocity(const mesh::TriMesh& mesh, const VectorField& v);

/// max_q |integral q div v| over P1 test functions q.
double weak_divergence(const mesh::TriMesh& mesh, const VectorField& v);

}  // namespace snpp::fem
