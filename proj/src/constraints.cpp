#include <numeric>

#include "snpp/fem.hpp"

namespace snpp::fem {

namespace {

// Selection matrix Q (old unknowns x new unknowns) with Q(i, map[i]) = 1.
SparseMatrix selection(const std::vector<int>& map, int new_size) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] >= 0) trip.emplace_back(static_cast<int>(i), map[i], 1.0);
  }
  SparseMatrix q(static_cast<int>(map.size()), new_size);
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

void require_no_multiplier(const ConstrainedSystem& sys, const char* op) {
  if (sys.has_zero_mean) {
    throw Error(ErrorCode::InconsistentConstraint, op,
                "zero-mean multiplier must be the last constraint applied");
  }
}

}  // namespace

ConstrainedSystem make_system(SparseMatrix matrix, Vector rhs) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size()) {
    throw Error(ErrorCode::InvalidArgument, "fem::make_system", "matrix/rhs size mismatch");
  }
  ConstrainedSystem sys;
  sys.num_full = static_cast<int>(rhs.size());
  sys.matrix = std::move(matrix);
  sys.rhs = std::move(rhs);
  sys.full_to_current.resize(sys.num_full);
  std::iota(sys.full_to_current.begin(), sys.full_to_current.end(), 0);
  sys.fixed_values = Vector::Zero(sys.num_full);
  return sys;
}

Vector ConstrainedSystem::expand(const Vector& x) const {
  Vector full = fixed_values;
  for (int i = 0; i < num_full; ++i) {
    if (full_to_current[i] >= 0) full[i] = x[full_to_current[i]];
  }
  return full;
}

Vector ConstrainedSystem::restrict_sum(const Vector& full) const {
  Vector r = Vector::Zero(num_unknowns());
  for (int i = 0; i < num_full; ++i) {
    if (full_to_current[i] >= 0) r[full_to_current[i]] += full[i];
  }
  return r;
}

ConstrainedSystem apply_periodic(ConstrainedSystem sys, const std::vector<std::pair<int, int>>& pairs) {
  const char* op = "fem::apply_periodic";
  require_no_multiplier(sys, op);
  const int n = sys.num_unknowns();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [master, slave] : pairs) {
    if (master < 0 || slave < 0 || master >= sys.num_full || slave >= sys.num_full) {
      throw Error(ErrorCode::InvalidArgument, op, "periodic pair out of range");
    }
    const int cm = sys.full_to_current[master];
    const int cs = sys.full_to_current[slave];
    if ((cm < 0) != (cs < 0)) {
      throw Error(ErrorCode::InconsistentConstraint, op, "periodic pair joins a fixed and a free dof");
    }
    if (cm < 0) continue;
    const int rm = find(cm), rs = find(cs);
    if (rm == rs) continue;
    // The smaller index represents the class, which keeps masters stable.
    if (rm < rs) parent[rs] = rm; else parent[rm] = rs;
  }
  std::vector<int> new_index(n, -1);
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (find(i) == i) new_index[i] = count++;
  }
  std::vector<int> map(n);
  for (int i = 0; i < n; ++i) map[i] = new_index[find(i)];
  const SparseMatrix q = selection(map, count);
  SparseMatrix reduced = SparseMatrix(q.transpose() * sys.matrix * q);
  reduced.makeCompressed();
  sys.matrix = std::move(reduced);
  sys.rhs = q.transpose() * sys.rhs;
  for (int& c : sys.full_to_current) {
    if (c >= 0) c = map[c];
  }
  return sys;
}

ConstrainedSystem apply_dirichlet(ConstrainedSystem sys, const std::vector<int>& nodes,
                                  const std::vector<double>& values) {
  const char* op = "fem::apply_dirichlet";
  require_no_multiplier(sys, op);
  if (nodes.size() != values.size()) throw Error(ErrorCode::InvalidArgument, op, "nodes/values size mismatch");
  const int n = sys.num_unknowns();
  Vector g = Vector::Zero(n);
  std::vector<char> fixed(n, 0);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const int c = sys.full_to_current.at(nodes[k]);
    if (c < 0) {
      if (sys.fixed_values[nodes[k]] != values[k]) {
        throw Error(ErrorCode::InconsistentConstraint, op, "dof fixed twice with different values");
      }
      continue;
    }
    if (fixed[c] && g[c] != values[k]) {
      throw Error(ErrorCode::InconsistentConstraint, op, "periodic images fixed to different values");
    }
    fixed[c] = 1;
    g[c] = values[k];
  }
  std::vector<int> map(n, -1);
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (!fixed[i]) map[i] = count++;
  }
  const SparseMatrix q = selection(map, count);
  // b_F - A_FD g_D
  const Vector lifted = sys.rhs - sys.matrix * g;
  SparseMatrix reduced = SparseMatrix(q.transpose() * sys.matrix * q);
  reduced.makeCompressed();
  sys.matrix = std::move(reduced);
  sys.rhs = q.transpose() * lifted;
  for (int i = 0; i < sys.num_full; ++i) {
    const int c = sys.full_to_current[i];
    if (c < 0) continue;
    if (fixed[c]) sys.fixed_values[i] = g[c];
    sys.full_to_current[i] = map[c];
  }
  sys.has_dirichlet = sys.has_dirichlet || !nodes.empty();
  return sys;
}

ConstrainedSystem apply_zero_mean(ConstrainedSystem sys, const Vector& weights) {
  const char* op = "fem::apply_zero_mean";
  if (sys.has_dirichlet) {
    throw Error(ErrorCode::InconsistentConstraint, op,
                "zero-mean constraint requested on a field with Dirichlet data");
  }
  require_no_multiplier(sys, op);
  if (weights.size() != sys.num_full) throw Error(ErrorCode::InvalidArgument, op, "weights size mismatch");
  const Vector w = sys.restrict_sum(weights);
  const int n = sys.num_unknowns();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sys.matrix.nonZeros() + 2 * n);
  for (int r = 0; r < sys.matrix.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(sys.matrix, r); it; ++it) trip.emplace_back(r, it.col(), it.value());
  }
  for (int i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    trip.emplace_back(i, n, w[i]);
    trip.emplace_back(n, i, w[i]);
  }
  SparseMatrix aug(n + 1, n + 1);
  aug.setFromTriplets(trip.begin(), trip.end());
  aug.makeCompressed();
  sys.matrix = std::move(aug);
  Vector rhs(n + 1);
  rhs << sys.rhs, 0.0;
  sys.rhs = std::move(rhs);
  sys.has_zero_mean = true;
  return sys;
}

}  // namespace snpp::fem
