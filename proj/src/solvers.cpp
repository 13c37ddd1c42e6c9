#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "snpp/fem.hpp"

namespace snpp::fem {

Vector solve_spd(const SparseMatrix& a, const Vector& b, double tol, int max_iter, SolveStats* stats) {
  const char* op = "fem::solve_spd";
  const int n = static_cast<int>(b.size());
  if (a.rows() != n || a.cols() != n) throw Error(ErrorCode::InvalidArgument, op, "size mismatch");
  if (max_iter <= 0) max_iter = 10 * n + 100;
  Vector x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (stats) *stats = {};
  if (bnorm == 0.0) return x;

  Vector inv_diag(n);
  const Vector diag = a.diagonal();
  for (int i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0)) {
      throw Error(ErrorCode::SolverBreakdown, op,
                  "non-positive diagonal entry at row " + std::to_string(i) + " (matrix not SPD)");
    }
    inv_diag[i] = 1.0 / diag[i];
  }
  Vector r = b;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  double best = 1.0;
  int best_iter = 0;
  const int window = std::max(100, n / 10);
  for (int k = 1; k <= max_iter; ++k) {
    const Vector ap = a * p;
    const double curvature = p.dot(ap);
    if (!(curvature > 1e-300 * p.squaredNorm())) {
      throw Error(ErrorCode::SolverBreakdown, op, "non-positive curvature (matrix indefinite or singular)");
    }
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * ap;
    const double rel = r.norm() / bnorm;
    if (stats) *stats = {k, rel};
    if (rel <= tol) return x;
    if (rel < 0.999 * best) {
      best = rel;
      best_iter = k;
    } else if (k - best_iter > window) {
      throw Error(ErrorCode::SolverBreakdown, op,
                  "residual stagnated at " + std::to_string(best) + " (singular or incompatible system)");
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw Error(ErrorCode::MaxIterationsExceeded, op,
              "no convergence within " + std::to_string(max_iter) + " iterations");
}

Vector solve_direct(const SparseMatrix& a, const Vector& b) {
  const char* op = "fem::solve_direct";
  Eigen::SparseMatrix<double> col(a);
  col.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(col);
  lu.factorize(col);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SolverBreakdown, op, "sparse LU factorization failed: " + lu.lastErrorMessage());
  }
  Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw Error(ErrorCode::SolverBreakdown, op, "sparse LU solve failed");
  }
  const double bnorm = std::max(b.norm(), 1e-300);
  const double res = (a * x - b).norm() / bnorm;
  if (b.norm() > 0.0 && res > 1e-6) {
    throw Error(ErrorCode::SolverBreakdown, op, "residual " + std::to_string(res) + " after LU solve");
  }
  return x;
}

Vector solve_constrained(const ConstrainedSystem& sys, bool spd, double tol) {
  if (sys.num_unknowns() == 0) return sys.expand(Vector());
  const Vector x = (spd && !sys.has_zero_mean) ? solve_spd(sys.matrix, sys.rhs, tol)
                                                : solve_direct(sys.matrix, sys.rhs);
  return sys.expand(x);
}

struct FactoredSystem::Impl {
  ConstrainedSystem sys;
  bool spd = false;
  Eigen::SparseMatrix<double> col;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

FactoredSystem::FactoredSystem(ConstrainedSystem sys, bool spd) : impl_(std::make_unique<Impl>()) {
  const char* op = "fem::FactoredSystem";
  Impl& s = *impl_;
  s.spd = spd && !sys.has_zero_mean;
  s.sys = std::move(sys);
  s.col = Eigen::SparseMatrix<double>(s.sys.matrix);
  s.col.makeCompressed();
  if (s.sys.num_unknowns() == 0) return;
  if (s.spd) {
    s.ldlt.compute(s.col);
    if (s.ldlt.info() != Eigen::Success) throw Error(ErrorCode::SolverBreakdown, op, "LDLT factorization failed");
  } else {
    s.lu.analyzePattern(s.col);
    s.lu.factorize(s.col);
    if (s.lu.info() != Eigen::Success) {
      throw Error(ErrorCode::SolverBreakdown, op, "sparse LU factorization failed: " + s.lu.lastErrorMessage());
    }
  }
}

FactoredSystem::~FactoredSystem() = default;
FactoredSystem::FactoredSystem(FactoredSystem&&) noexcept = default;
FactoredSystem& FactoredSystem::operator=(FactoredSystem&&) noexcept = default;

const ConstrainedSystem& FactoredSystem::system() const { return impl_->sys; }

Vector FactoredSystem::solve(const Vector& full_rhs) const {
  const char* op = "fem::FactoredSystem::solve";
  const Impl& s = *impl_;
  if (full_rhs.size() != s.sys.num_full) throw Error(ErrorCode::InvalidArgument, op, "rhs size mismatch");
  if (s.sys.num_unknowns() == 0) return s.sys.expand(Vector());
  const Vector b = s.sys.rhs + s.sys.restrict_sum(full_rhs);
  const Vector x = s.spd ? Vector(s.ldlt.solve(b)) : Vector(s.lu.solve(b));
  if (!x.allFinite()) throw Error(ErrorCode::SolverBreakdown, op, "non-finite solution");
  const double bnorm = b.norm();
  if (bnorm > 0.0 && (s.col * x - b).norm() > 1e-8 * bnorm) {
    throw Error(ErrorCode::SolverBreakdown, op, "residual too large (singular or incompatible system)");
  }
  return s.sys.expand(x);
}

Vector step_implicit(const SparseMatrix& mass, const SparseMatrix& op, const Vector& state, double dt,
                     const Vector& rhs, bool spd) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "fem::step_implicit", "dt must be positive");
  SparseMatrix lhs = mass + dt * op;
  lhs.makeCompressed();
  Vector b = mass * state;
  if (rhs.size() > 0) b += dt * rhs;
  return spd ? solve_spd(lhs, b, 1e-13) : solve_direct(lhs, b);
}

}  // namespace snpp::fem
