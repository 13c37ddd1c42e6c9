#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "snpp/fem.hpp"

namespace snpp::fem {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr int kDirectLimit = 50000;

SparseMatrix selection(const std::vector<int>& full_to_current, int cols) {
  Triplets trip;
  for (std::size_t i = 0; i < full_to_current.size(); ++i) {
    if (full_to_current[i] >= 0) trip.emplace_back(static_cast<int>(i), full_to_current[i], 1.0);
  }
  SparseMatrix q(static_cast<int>(full_to_current.size()), cols);
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

std::vector<int> merge_classes(int n, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : pairs) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) (ra < rb ? parent[rb] : parent[ra]) = std::min(ra, rb);
  }
  std::vector<int> idx(n, -1), out(n);
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (find(i) == i) idx[i] = count++;
  }
  for (int i = 0; i < n; ++i) out[i] = idx[find(i)];
  return out;
}

}  // namespace

struct StokesSolver::Impl {
  const mesh::TriMesh* mesh = nullptr;
  std::shared_ptr<const P2Space> p2;
  double viscosity = 1.0;
  bool no_solid = false;
  bool uzawa = false;
  bool constant_kernel = false;

  SparseMatrix qv;  // full P2 -> reduced velocity component
  SparseMatrix qp;  // full P1 -> reduced pressure
  int nv = 0;
  int np = 0;
  SparseMatrix bx, by;  // reduced divergence blocks (np x nv)
  Vector pressure_weights;  // full P1 basis integrals
  Vector reduced_weights;

  SparseMatrix a_red;  // viscosity-scaled reduced velocity Laplacian
  bool fallback = false;

  // Direct path (built lazily when used as a fallback).
  mutable std::unique_ptr<Eigen::SparseLU<ColMatrix>> lu;
  // Uzawa path.
  std::unique_ptr<Eigen::SimplicialLDLT<ColMatrix>> a_chol;
  std::unique_ptr<Eigen::SimplicialLDLT<ColMatrix>> mp_chol;

  Vector load(const VectorField& f, int component) const {
    Vector b = Vector::Zero(p2->size());
    const auto& rule = triangle_rule(4);
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      const auto el = p1_element(*mesh, t);
      const auto& dofs = p2->element_dofs[t];
      for (const auto& q : rule) {
        const Vec2 v = f.eval(*mesh, t, q.bary);
        const double fc = component == 0 ? v.x : v.y;
        if (fc == 0.0) continue;
        const auto phi = p2_values(q.bary);
        for (int k = 0; k < 6; ++k) b[dofs[k]] += q.weight * el.area * fc * phi[k];
      }
    }
    return b;
  }

  void factor_direct() const {
    Triplets tk;
    tk.reserve(2 * a_red.nonZeros() + 4 * bx.nonZeros() + 2 * np);
    for (int r = 0; r < a_red.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(a_red, r); it; ++it) {
        tk.emplace_back(r, it.col(), it.value());
        tk.emplace_back(nv + r, nv + it.col(), it.value());
      }
    }
    const int p0 = 2 * nv;
    for (int r = 0; r < np; ++r) {
      for (SparseMatrix::InnerIterator it(bx, r); it; ++it) {
        tk.emplace_back(p0 + r, it.col(), -it.value());
        tk.emplace_back(it.col(), p0 + r, -it.value());
      }
      for (SparseMatrix::InnerIterator it(by, r); it; ++it) {
        tk.emplace_back(p0 + r, nv + it.col(), -it.value());
        tk.emplace_back(nv + it.col(), p0 + r, -it.value());
      }
    }
    const int total = 2 * nv + np;
    int size = total;
    if (constant_kernel) {
      for (int r = 0; r < np; ++r) {
        tk.emplace_back(p0 + r, total, reduced_weights[r]);
        tk.emplace_back(total, p0 + r, reduced_weights[r]);
      }
      size += 1;
    }
    ColMatrix k(size, size);
    k.setFromTriplets(tk.begin(), tk.end());
    k.makeCompressed();
    lu = std::make_unique<Eigen::SparseLU<ColMatrix>>();
    lu->analyzePattern(k);
    lu->factorize(k);
    if (lu->info() != Eigen::Success) {
      throw Error(ErrorCode::SolverBreakdown, "fem::StokesSolver", "saddle-point LU failed: " + lu->lastErrorMessage());
    }
  }

  void solve_direct(const Vector& fx, const Vector& fy, Vector& ux, Vector& uy, Vector& p) const {
    if (!lu) factor_direct();
    Vector rhs = Vector::Zero(2 * nv + np + (constant_kernel ? 1 : 0));
    rhs.segment(0, nv) = fx;
    rhs.segment(nv, nv) = fy;
    const Vector x = lu->solve(rhs);
    if (!x.allFinite()) {
      throw Error(ErrorCode::SolverBreakdown, "fem::solve_stokes", "saddle-point solve produced non-finite values");
    }
    ux = x.segment(0, nv);
    uy = x.segment(nv, nv);
    p = x.segment(2 * nv, np);
  }

  // Preconditioned CG on the pressure Schur complement B (visc A)^-1 B^T.
  int solve_uzawa(const Vector& fx, const Vector& fy, Vector& ux, Vector& uy, Vector& p) const {
    const char* op = "fem::solve_stokes";
    auto solve_a = [&](const Vector& r) -> Vector { return a_chol->solve(r); };
    auto project = [&](Vector& v) {
      if (constant_kernel) v.array() -= v.mean();
    };
    auto schur = [&](const Vector& q) -> Vector {
      return bx * solve_a(bx.transpose() * q) + by * solve_a(by.transpose() * q);
    };
    const Vector u0x = solve_a(fx), u0y = solve_a(fy);
    Vector g = -(bx * u0x + by * u0y);
    project(g);
    p = Vector::Zero(np);
    const double gnorm = g.norm();
    int k = 0;
    if (gnorm > 0.0) {
      Vector r = g;
      Vector z = viscosity * mp_chol->solve(r);
      project(z);
      Vector d = z;
      double rz = r.dot(z);
      const int max_iter = 2000;
      for (k = 1; k <= max_iter; ++k) {
        const Vector sd = schur(d);
        const double curv = d.dot(sd);
        if (!(curv > 0.0)) throw Error(ErrorCode::SolverBreakdown, op, "Schur complement lost positivity");
        const double alpha = rz / curv;
        p += alpha * d;
        r -= alpha * sd;
        project(r);
        if (r.norm() <= 1e-12 * gnorm) break;
        z = viscosity * mp_chol->solve(r);
        project(z);
        const double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
      }
      if (k > max_iter) throw Error(ErrorCode::MaxIterationsExceeded, op, "Uzawa iteration did not converge");
    }
    ux = solve_a(fx + bx.transpose() * p);
    uy = solve_a(fy + by.transpose() * p);
    return k;
  }

  VectorField expand_velocity(const Vector& ux, const Vector& uy) const {
    VectorField v;
    v.kind = FieldKind::P2;
    v.p2 = p2;
    const Vector fx = qv * ux;
    const Vector fy = qv * uy;
    v.values.resize(p2->size());
    for (int i = 0; i < p2->size(); ++i) v.values[i] = {fx[i], fy[i]};
    return v;
  }
};

StokesSolver::StokesSolver(const mesh::TriMesh& mesh, double viscosity, const StokesBoundary& bc,
                           StokesMethod method)
    : impl_(std::make_unique<Impl>()) {
  const char* op = "fem::StokesSolver";
  if (!(viscosity > 0.0)) throw Error(ErrorCode::InvalidArgument, op, "viscosity must be positive");
  Impl& s = *impl_;
  s.mesh = &mesh;
  s.viscosity = viscosity;
  s.p2 = std::make_shared<const P2Space>(build_p2_space(mesh));
  const P2Space& space = *s.p2;
  const int n2 = space.size();
  const int n1 = mesh.num_nodes();

  // Scalar P2 Laplacian and divergence blocks on the full spaces.
  Triplets ta, tbx, tby;
  ta.reserve(36 * mesh.triangles.size());
  tbx.reserve(18 * mesh.triangles.size());
  tby.reserve(18 * mesh.triangles.size());
  const auto& rule = triangle_rule(4);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    const auto& dofs = space.element_dofs[t];
    const auto& tri = mesh.triangles[t];
    std::array<std::array<double, 6>, 6> ke{};
    std::array<std::array<double, 6>, 3> kx{}, ky{};
    for (const auto& q : rule) {
      const auto g = p2_gradients(q.bary, el);
      const double w = q.weight * el.area;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) ke[i][j] += w * g[i].dot(g[j]);
        for (int k = 0; k < 3; ++k) {
          kx[k][i] += w * q.bary[k] * g[i].x;
          ky[k][i] += w * q.bary[k] * g[i].y;
        }
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) ta.emplace_back(dofs[i], dofs[j], ke[i][j]);
      for (int k = 0; k < 3; ++k) {
        tbx.emplace_back(tri[k], dofs[i], kx[k][i]);
        tby.emplace_back(tri[k], dofs[i], ky[k][i]);
      }
    }
  }
  SparseMatrix a_full(n2, n2), bx_full(n1, n2), by_full(n1, n2);
  a_full.setFromTriplets(ta.begin(), ta.end());
  bx_full.setFromTriplets(tbx.begin(), tbx.end());
  by_full.setFromTriplets(tby.begin(), tby.end());

  // Velocity constraints: periodic merge, then no-slip elimination.
  ConstrainedSystem vsys = make_system(a_full, Vector::Zero(n2));
  if (bc.periodic) vsys = apply_periodic(std::move(vsys), p2_periodic_pairs(mesh, space));
  std::vector<int> fixed;
  for (auto tag : bc.no_slip) {
    const auto nodes = p2_boundary_nodes(mesh, space, tag);
    fixed.insert(fixed.end(), nodes.begin(), nodes.end());
  }
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
  if (fixed.empty()) {
    s.no_solid = true;
    return;
  }
  vsys = apply_dirichlet(std::move(vsys), fixed, std::vector<double>(fixed.size(), 0.0));
  s.nv = vsys.num_unknowns();
  s.qv = selection(vsys.full_to_current, s.nv);

  const std::vector<int> pmap =
      bc.periodic ? merge_classes(n1, mesh.periodic_pairs) : [&] {
        std::vector<int> id(n1);
        std::iota(id.begin(), id.end(), 0);
        return id;
      }();
  s.np = *std::max_element(pmap.begin(), pmap.end()) + 1;
  s.qp = selection(pmap, s.np);

  s.bx = SparseMatrix(s.qp.transpose() * bx_full * s.qv);
  s.by = SparseMatrix(s.qp.transpose() * by_full * s.qv);
  s.pressure_weights = assemble_basis_integrals(mesh);
  s.reduced_weights = s.qp.transpose() * s.pressure_weights;

  // Constants are in the pressure kernel iff 1^T B vanishes.
  const Vector ones = Vector::Ones(s.np);
  const double kernel_res =
      std::max((s.bx.transpose() * ones).cwiseAbs().maxCoeff(), (s.by.transpose() * ones).cwiseAbs().maxCoeff());
  s.constant_kernel = kernel_res <= 1e-10;

  s.a_red = SparseMatrix(viscosity * vsys.matrix);
  const int total = 2 * s.nv + s.np;
  // Auto prefers Uzawa (cheap symmetric factorizations); the saddle-point LU is
  // only a fallback for small systems.
  s.uzawa = method != StokesMethod::Direct;
  s.fallback = method == StokesMethod::Auto && total < kDirectLimit;

  if (!s.uzawa) {
    s.factor_direct();
  } else {
    ColMatrix a_col(s.a_red);
    s.a_chol = std::make_unique<Eigen::SimplicialLDLT<ColMatrix>>(a_col);
    if (s.a_chol->info() != Eigen::Success) {
      throw Error(ErrorCode::SolverBreakdown, op, "velocity Laplacian factorization failed");
    }
    const SparseMatrix mp = SparseMatrix(s.qp.transpose() * assemble_mass(mesh) * s.qp);
    ColMatrix mp_col(mp);
    s.mp_chol = std::make_unique<Eigen::SimplicialLDLT<ColMatrix>>(mp_col);
    if (s.mp_chol->info() != Eigen::Success) {
      throw Error(ErrorCode::SolverBreakdown, op, "pressure mass factorization failed");
    }
  }
}

StokesSolver::~StokesSolver() = default;
StokesSolver::StokesSolver(StokesSolver&&) noexcept = default;
StokesSolver& StokesSolver::operator=(StokesSolver&&) noexcept = default;

int StokesSolver::num_dofs() const { return 2 * impl_->nv + impl_->np; }
bool StokesSolver::uses_uzawa() const { return impl_->uzawa; }
const std::shared_ptr<const P2Space>& StokesSolver::space() const { return impl_->p2; }

StokesSolution StokesSolver::solve(const VectorField& forcing) const {
  const char* op = "fem::solve_stokes";
  const Impl& s = *impl_;
  forcing.check(*s.mesh, op);
  StokesSolution out;
  if (forcing.is_zero() || s.no_solid) {
    if (s.no_solid && !forcing.is_zero()) {
      throw Error(ErrorCode::NoSolidPhase, op,
                  "no no-slip surface: the periodic Stokes system is incompatible with the forcing");
    }
    out.velocity.kind = FieldKind::P2;
    out.velocity.p2 = s.p2;
    out.velocity.values.assign(s.p2->size(), Vec2{});
    out.pressure = Vector::Zero(s.mesh->num_nodes());
    return out;
  }
  const Vector fx = s.qv.transpose() * s.load(forcing, 0);
  const Vector fy = s.qv.transpose() * s.load(forcing, 1);
  Vector ux, uy, p;
  if (!s.uzawa) {
    s.solve_direct(fx, fy, ux, uy, p);
    out.iterations = 1;
  } else {
    try {
      out.iterations = s.solve_uzawa(fx, fy, ux, uy, p);
    } catch (const Error& e) {
      if (!s.fallback) throw;
      s.solve_direct(fx, fy, ux, uy, p);
      out.iterations = 1;
    }
  }
  out.divergence_residual = (s.bx * ux + s.by * uy).cwiseAbs().maxCoeff();
  out.velocity = s.expand_velocity(ux, uy);
  out.pressure = s.qp * p;
  if (s.constant_kernel) {
    const double mean = s.pressure_weights.dot(out.pressure) / s.pressure_weights.sum();
    out.pressure.array() -= mean;
  }
  return out;
}

StokesSolution solve_stokes(const mesh::TriMesh& mesh, const VectorField& forcing, const StokesBoundary& bc,
                            double viscosity, StokesMethod method) {
  return StokesSolver(mesh, viscosity, bc, method).solve(forcing);
}

Vec2 integrate_velocity(const mesh::TriMesh& mesh, const VectorField& v) {
  v.check(mesh, "fem::integrate_velocity");
  Vec2 sum{};
  const auto& rule = triangle_rule(4);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.triangle_area(t);
    for (const auto& q : rule) sum += v.eval(mesh, t, q.bary) * (q.weight * a);
  }
  return sum;
}

double weak_divergence(const mesh::TriMesh& mesh, const VectorField& v) {
  v.check(mesh, "fem::weak_divergence");
  Vector r = Vector::Zero(mesh.num_nodes());
  const auto& rule = triangle_rule(4);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (const auto& q : rule) {
      double div = 0.0;
      switch (v.kind) {
        case FieldKind::P0: div = 0.0; break;
        case FieldKind::P1:
          for (int k = 0; k < 3; ++k) div += v.values[tri[k]].dot(el.grad[k]);
          break;
        case FieldKind::P1Disc:
          for (int k = 0; k < 3; ++k) div += v.values[3 * t + k].dot(el.grad[k]);
          break;
        case FieldKind::P2: {
          const auto g = p2_gradients(q.bary, el);
          const auto& dofs = v.p2->element_dofs[t];
          for (int k = 0; k < 6; ++k) div += v.values[dofs[k]].dot(g[k]);
          break;
        }
      }
      for (int k = 0; k < 3; ++k) r[tri[k]] += q.weight * el.area * q.bary[k] * div;
    }
  }
  if (v.kind == FieldKind::P0) {
    // Piecewise constant fields: -integral of v . grad q (no interior divergence).
    r.setZero();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const auto el = p1_element(mesh, t);
      for (int k = 0; k < 3; ++k) r[mesh.triangles[t][k]] -= el.area * v.values[t].dot(el.grad[k]);
    }
  }
  if (!mesh.periodic_pairs.empty()) {
    const auto cls = merge_classes(mesh.num_nodes(), mesh.periodic_pairs);
    Vector merged = Vector::Zero(*std::max_element(cls.begin(), cls.end()) + 1);
    for (int i = 0; i < mesh.num_nodes(); ++i) merged[cls[i]] += r[i];
    return merged.cwiseAbs().maxCoeff();
  }
  return r.cwiseAbs().maxCoeff();
}

}  // namespace snpp::fem
