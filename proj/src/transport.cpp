#include <Eigen/SparseLU>

#include "snpp/fem.hpp"

namespace snpp::fem {

std::pair<Vector, Vector> step_species(const SpeciesStep& st, const Vector& c_plus, const Vector& c_minus,
                                       double dt) {
  const char* op = "fem::step_species";
  if (!st.mesh) throw Error(ErrorCode::InvalidArgument, op, "mesh missing");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, op, "dt must be positive");
  const auto& mesh = *st.mesh;
  const int n = mesh.num_nodes();
  if (c_plus.size() != n || c_minus.size() != n) {
    throw Error(ErrorCode::FieldMeshMismatch, op, "concentration size differs from mesh node count");
  }
  const Vector lumped = assemble_basis_integrals(mesh) * st.weight;
  const SparseMatrix diff = assemble_stiffness(mesh, st.diffusion);
  const VectorField zero = VectorField::zeros_p1(mesh);
  const VectorField& vel = st.velocity ? *st.velocity : zero;

  std::array<SparseMatrix, 2> ops;
  for (int s = 0; s < 2; ++s) {
    std::optional<Drift> drift;
    if (st.potential && st.drift_scale != 0.0) {
      drift = Drift{st.potential, st.drift_coeff, s == 0 ? st.drift_scale : -st.drift_scale};
    }
    ops[s] = diff - assemble_convection(mesh, vel, drift);
    if (st.upwind) {
      const double dmin = std::max(st.diffusion.sym_eigenvalues()[0], 1e-300);
      ops[s] += assemble_upwind_diffusion(mesh, vel, drift, dmin);
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * (ops[0].nonZeros() + 2 * n));
  for (int s = 0; s < 2; ++s) {
    const int off = s * n;
    for (int r = 0; r < n; ++r) {
      for (SparseMatrix::InnerIterator it(ops[s], r); it; ++it) trip.emplace_back(off + r, off + it.col(), it.value());
      trip.emplace_back(off + r, off + r, lumped[r] * (1.0 / dt + 1.0));
      trip.emplace_back(off + r, (1 - s) * n + r, -lumped[r]);
    }
  }
  Eigen::SparseMatrix<double> a(2 * n, 2 * n);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  Vector b(2 * n);
  b << lumped.cwiseProduct(c_plus) / dt, lumped.cwiseProduct(c_minus) / dt;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SolverBreakdown, op, "sparse LU factorization failed: " + lu.lastErrorMessage());
  }
  const Vector x = lu.solve(b);
  if (!x.allFinite() || (a * x - b).norm() > 1e-10 * b.norm()) {
    throw Error(ErrorCode::SolverBreakdown, op, "transport solve inaccurate");
  }
  return {x.head(n), x.tail(n)};
}

}  // namespace snpp::fem
