#include "snpp/micro.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace snpp::micro {

namespace {

double entropy(const fem::Vector& w, const fem::Vector& c) {
  double e = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    if (c[i] > 0.0) e += w[i] * c[i] * std::log(c[i]);
  }
  return e;
}

std::vector<int> gamma_nodes(const mesh::TriMesh& m) {
  std::vector<int> nodes;
  for (const auto& e : m.boundary_edges) {
    if (e.tag != mesh::BoundaryTag::GammaInterior) continue;
    nodes.push_back(e.a);
    nodes.push_back(e.b);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

double max_abs(const std::vector<Vec2>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max({m, std::abs(x.x), std::abs(x.y)});
  return m;
}

}  // namespace

struct MicroSolver::Impl {
  std::shared_ptr<const mesh::PerforatedMesh> pm;
  macro::ScalingRegime regime;
  double eps = 1.0;
  double eps_alpha = 1.0;
  fem::Vector weights;
  fem::SparseMatrix mass;
  fem::SparseMatrix stiff;
  fem::Vector gamma_load;  // eps * sigma * integral over Gamma of phi_i
  std::unique_ptr<fem::FactoredSystem> poisson;
  std::unique_ptr<fem::StokesSolver> stokes;
};

MicroSolver::MicroSolver(std::shared_ptr<const mesh::PerforatedMesh> pmesh, const macro::ScalingRegime& regime)
    : impl_(std::make_unique<Impl>()) {
  const char* op = "micro::MicroSolver";
  macro::classify_regime(regime);
  Impl& s = *impl_;
  s.pm = std::move(pmesh);
  s.regime = regime;
  s.eps = s.pm->eps;
  s.eps_alpha = std::pow(s.eps, regime.alpha);
  const auto& mesh = s.pm->mesh;
  const int n = mesh.num_nodes();
  s.weights = fem::assemble_basis_integrals(mesh);
  s.mass = fem::assemble_mass(mesh);
  s.stiff = fem::assemble_stiffness(mesh);
  const fem::SparseMatrix a = fem::SparseMatrix(s.eps_alpha * s.stiff);
  if (regime.bc == macro::BcType::Neumann) {
    s.gamma_load = fem::assemble_boundary_load(mesh, mesh::BoundaryTag::GammaInterior, s.eps * regime.sigma);
    auto sys = fem::apply_zero_mean(fem::make_system(a, fem::Vector::Zero(n)), s.weights);
    s.poisson = std::make_unique<fem::FactoredSystem>(std::move(sys));
  } else {
    const auto fixed = gamma_nodes(mesh);
    if (fixed.empty()) throw Error(ErrorCode::InvalidArgument, op, "Dirichlet surface potential needs inclusions");
    s.gamma_load = fem::Vector::Zero(n);
    auto sys = fem::apply_dirichlet(fem::make_system(a, fem::Vector::Zero(n)), fixed,
                                    std::vector<double>(fixed.size(), regime.phi_d));
    s.poisson = std::make_unique<fem::FactoredSystem>(std::move(sys), true);
  }
  fem::StokesBoundary bc;
  bc.no_slip = {mesh::BoundaryTag::GammaInterior, mesh::BoundaryTag::OuterBoundary};
  s.stokes = std::make_unique<fem::StokesSolver>(mesh, s.eps * s.eps, bc);
}

MicroSolver::~MicroSolver() = default;
MicroSolver::MicroSolver(MicroSolver&&) noexcept = default;

const mesh::PerforatedMesh& MicroSolver::pmesh() const { return *impl_->pm; }
double MicroSolver::eps() const { return impl_->eps; }

fem::Vector MicroSolver::potential(const fem::Vector& cp, const fem::Vector& cm) const {
  const char* op = "micro::step_micro";
  const Impl& s = *impl_;
  const int n = s.pm->mesh.num_nodes();
  if (cp.size() != n || cm.size() != n) {
    throw Error(ErrorCode::FieldMeshMismatch, op, "concentration size differs from mesh node count");
  }
  const fem::Vector rhs = s.mass * (cp - cm) + s.gamma_load;
  if (s.regime.bc == macro::BcType::Neumann) {
    const double net = rhs.sum();
    if (std::abs(net) > 1e-10) {
      std::ostringstream msg;
      msg << "Neumann data integrate to " << net << " (charge not balanced by surface charge)";
      throw Error(ErrorCode::IncompatibleSource, op, msg.str());
    }
  }
  return s.poisson->solve(rhs);
}

fem::VectorField MicroSolver::forcing(const fem::Vector& cp, const fem::Vector& cm, const fem::Vector& phi) const {
  const Impl& s = *impl_;
  const auto& mesh = s.pm->mesh;
  const double scale = -std::pow(s.eps, s.regime.beta);
  const auto g = fem::gradient_p0(mesh, phi);
  fem::VectorField f;
  f.kind = fem::FieldKind::P1Disc;
  f.values.resize(3 * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) f.values[3 * t + k] = g[t] * (scale * (cp[tri[k]] - cm[tri[k]]));
  }
  return f;
}

fem::StokesSolution MicroSolver::flow_from_forcing(const fem::VectorField& f) const {
  return impl_->stokes->solve(f);
}

fem::StokesSolution MicroSolver::flow(const fem::Vector& cp, const fem::Vector& cm, const fem::Vector& phi) const {
  return flow_from_forcing(forcing(cp, cm, phi));
}

std::pair<fem::Vector, fem::Vector> MicroSolver::step_np(const fem::Vector& cp, const fem::Vector& cm,
                                                         const fem::Vector& phi, const fem::VectorField& v, double dt,
                                                         bool upwind) const {
  const Impl& s = *impl_;
  fem::SpeciesStep st;
  st.mesh = &s.pm->mesh;
  st.velocity = v.is_zero() ? nullptr : &v;
  st.potential = &phi;
  st.drift_scale = std::pow(s.eps, s.regime.gamma);
  st.upwind = upwind;
  return fem::step_species(st, cp, cm, dt);
}

DiagnosticRow MicroSolver::diagnose(const MicroState& st) const {
  const Impl& s = *impl_;
  DiagnosticRow r;
  r.t = st.t;
  r.mass = s.weights.dot(st.c_plus + st.c_minus);
  r.charge = s.weights.dot(st.c_plus - st.c_minus);
  r.min_c = std::min(st.c_plus.minCoeff(), st.c_minus.minCoeff());
  r.max_c = std::max(st.c_plus.maxCoeff(), st.c_minus.maxCoeff());
  r.energy = entropy(s.weights, st.c_plus) + entropy(s.weights, st.c_minus) +
             0.5 * s.eps_alpha * st.potential.dot(s.stiff * st.potential);
  r.phi_mean = s.weights.dot(st.potential);
  r.p_mean = s.weights.dot(st.pressure);
  r.div_residual = st.div_residual;
  r.additivity_defect = ((st.c_plus + st.c_minus).array() - 1.0).abs().maxCoeff();
  return r;
}

namespace {

// Shared stepping loop; `flow_cache` carries the last forcing and flow between sweeps.
struct FlowCache {
  fem::VectorField forcing;
  fem::StokesSolution flow;
  bool valid = false;
};

const fem::StokesSolution& cached_flow(const MicroSolver& solver, FlowCache& cache, const fem::Vector& cp,
                                       const fem::Vector& cm, const fem::Vector& phi, bool exact) {
  fem::VectorField f = solver.forcing(cp, cm, phi);
  if (!exact && cache.valid) {
    double diff = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const Vec2 d = f.values[i] - cache.forcing.values[i];
      diff = std::max({diff, std::abs(d.x), std::abs(d.y)});
    }
    const double scale = max_abs(f.values);
    if (diff <= 1e-8 * scale || (scale == 0.0 && diff == 0.0)) return cache.flow;
  }
  cache.flow = solver.flow_from_forcing(f);
  cache.forcing = std::move(f);
  cache.valid = true;
  return cache.flow;
}

MicroState advance(const MicroSolver& solver, const MicroState& s, double dt, const MicroProblem& pb,
                   FlowCache& cache, int& iters_out) {
  fem::Vector cp_it = s.c_plus, cm_it = s.c_minus;
  fem::Vector phi = s.potential;
  fem::StokesSolution flow;
  flow.velocity = s.velocity;
  flow.pressure = s.pressure;
  flow.divergence_residual = s.div_residual;
  int iters = 0;
  bool converged = false;
  for (iters = 1; iters <= pb.fp_max; ++iters) {
    if (iters > 1) {
      phi = solver.potential(cp_it, cm_it);
      flow = cached_flow(solver, cache, cp_it, cm_it, phi, pb.exact_stokes);
    }
    auto [cp_new, cm_new] = solver.step_np(s.c_plus, s.c_minus, phi, flow.velocity, dt, pb.upwind);
    const double change = std::max((cp_new - cp_it).cwiseAbs().maxCoeff(), (cm_new - cm_it).cwiseAbs().maxCoeff());
    cp_it = std::move(cp_new);
    cm_it = std::move(cm_new);
    if (change <= pb.fp_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::FixedPointDivergence, "micro::step_micro",
                "coupling iteration did not settle within " + std::to_string(pb.fp_max) + " sweeps");
  }
  MicroState out;
  out.t = s.t + dt;
  out.c_plus = std::move(cp_it);
  out.c_minus = std::move(cm_it);
  out.potential = solver.potential(out.c_plus, out.c_minus);
  const auto& fl = cached_flow(solver, cache, out.c_plus, out.c_minus, out.potential, pb.exact_stokes);
  out.velocity = fl.velocity;
  out.pressure = fl.pressure;
  out.div_residual = fl.divergence_residual;
  iters_out = iters;
  return out;
}

MicroState initial_state(const MicroSolver& solver, const MicroProblem& pb, FlowCache& cache) {
  MicroState s;
  s.c_plus = pb.c_plus0;
  s.c_minus = pb.c_minus0;
  s.potential = solver.potential(s.c_plus, s.c_minus);
  const auto& fl = cached_flow(solver, cache, s.c_plus, s.c_minus, s.potential, true);
  s.velocity = fl.velocity;
  s.pressure = fl.pressure;
  s.div_residual = fl.divergence_residual;
  return s;
}

void validate(const MicroProblem& pb) {
  const char* op = "micro::run_micro";
  if (!pb.pmesh) throw Error(ErrorCode::InvalidArgument, op, "mesh missing");
  const int n = pb.pmesh->mesh.num_nodes();
  if (pb.c_plus0.size() != n || pb.c_minus0.size() != n) {
    throw Error(ErrorCode::FieldMeshMismatch, op, "initial data size differs from mesh node count");
  }
  const double lo = std::min(pb.c_plus0.minCoeff(), pb.c_minus0.minCoeff());
  const double hi = std::max(pb.c_plus0.maxCoeff(), pb.c_minus0.maxCoeff());
  if (lo < 0.0 || hi > pb.lambda) throw Error(ErrorCode::InvalidArgument, op, "initial data must lie in [0, lambda]");
  if (!(pb.T > 0.0)) throw Error(ErrorCode::InvalidArgument, op, "T must be positive");
}

}  // namespace

MicroState step_micro(const MicroState& state, const MicroProblem& pb, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "micro::step_micro", "dt must be positive");
  const MicroSolver solver(pb.pmesh, pb.regime);
  FlowCache cache;
  int iters = 0;
  MicroState s = state;
  if (s.potential.size() == 0) s.potential = solver.potential(s.c_plus, s.c_minus);
  if (s.velocity.values.empty()) {
    const auto& fl = cached_flow(solver, cache, s.c_plus, s.c_minus, s.potential, true);
    s.velocity = fl.velocity;
    s.pressure = fl.pressure;
    s.div_residual = fl.divergence_residual;
  }
  return advance(solver, s, dt, pb, cache, iters);
}

MicroRun run_micro(const MicroProblem& pb, const MicroObserver& observer) {
  validate(pb);
  const MicroSolver solver(pb.pmesh, pb.regime);
  double dt = pb.dt;
  if (dt <= 0.0) {
    const double h = mesh::mesh_quality_report(pb.pmesh->mesh).h_max;
    dt = 0.25 * h * h;
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(pb.T / dt - 1e-9)));
  dt = pb.T / steps;

  MicroRun run;
  run.diagnostics.lambda = pb.lambda;
  run.diagnostics.additive_start = ((pb.c_plus0 + pb.c_minus0).array() - 1.0).abs().maxCoeff() <= 1e-12;
  run.diagnostics.zero_mean_potential = pb.regime.bc == macro::BcType::Neumann;

  FlowCache cache;
  MicroState s = initial_state(solver, pb, cache);
  run.diagnostics.rows.push_back(solver.diagnose(s));
  if (observer) observer(s, 0);
  for (int step = 1; step <= steps; ++step) {
    int iters = 0;
    s = advance(solver, s, dt, pb, cache, iters);
    s.t = step * dt;
    DiagnosticRow row = solver.diagnose(s);
    row.fp_iters = iters;
    run.diagnostics.rows.push_back(row);
    if (observer) observer(s, step);
  }
  run.final_state = std::move(s);
  run.steps = steps;
  return run;
}

namespace {

struct CellMap {
  int bx = 1, by = 1;  // eps-cells per coarse cell
  double cell_area = 1.0;
};

CellMap check_grid(const mesh::PerforatedMesh& pm, const CoarseGrid& g) {
  const char* op = "micro::average_micro_field";
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
  if (!near(g.rect.lo.x, pm.outer.lo.x) || !near(g.rect.lo.y, pm.outer.lo.y) || !near(g.rect.hi.x, pm.outer.hi.x) ||
      !near(g.rect.hi.y, pm.outer.hi.y)) {
    throw Error(ErrorCode::GridMisaligned, op, "coarse grid does not cover the perforated domain");
  }
  if (g.nx < 1 || g.ny < 1 || pm.cells_x % g.nx != 0 || pm.cells_y % g.ny != 0) {
    std::ostringstream msg;
    msg << "coarse grid " << g.nx << "x" << g.ny << " is not aligned with the " << pm.cells_x << "x" << pm.cells_y
        << " eps-cells";
    throw Error(ErrorCode::GridMisaligned, op, msg.str());
  }
  CellMap c;
  c.bx = pm.cells_x / g.nx;
  c.by = pm.cells_y / g.ny;
  c.cell_area = (g.rect.width() / g.nx) * (g.rect.height() / g.ny);
  return c;
}

template <class T, class Integrate>
std::vector<T> average(const mesh::PerforatedMesh& pm, const CoarseGrid& g, AverageMode mode, Integrate&& integ) {
  const CellMap cm = check_grid(pm, g);
  std::vector<T> sum(static_cast<std::size_t>(g.nx) * g.ny, T{});
  std::vector<double> area(sum.size(), 0.0);
  for (int t = 0; t < pm.mesh.num_triangles(); ++t) {
    const int c = pm.triangle_cell[t];
    const int ix = (c % pm.cells_x) / cm.bx;
    const int iy = (c / pm.cells_x) / cm.by;
    const std::size_t k = static_cast<std::size_t>(ix) + static_cast<std::size_t>(g.nx) * iy;
    sum[k] = sum[k] + integ(t);
    area[k] += pm.mesh.triangle_area(t);
  }
  for (std::size_t k = 0; k < sum.size(); ++k) {
    const double denom = mode == AverageMode::FluidMean ? area[k] : cm.cell_area;
    sum[k] = denom > 0.0 ? sum[k] * (1.0 / denom) : T{};
  }
  return sum;
}

}  // namespace

std::vector<double> average_micro_field(const mesh::PerforatedMesh& pm, const fem::Vector& field, const CoarseGrid& g,
                                        AverageMode mode) {
  if (field.size() != pm.mesh.num_nodes()) {
    throw Error(ErrorCode::FieldMeshMismatch, "micro::average_micro_field", "field is not nodal on this mesh");
  }
  return average<double>(pm, g, mode, [&](int t) {
    const auto& tri = pm.mesh.triangles[t];
    return pm.mesh.triangle_area(t) * (field[tri[0]] + field[tri[1]] + field[tri[2]]) / 3.0;
  });
}

std::vector<Vec2> average_micro_field(const mesh::PerforatedMesh& pm, const fem::VectorField& field,
                                      const CoarseGrid& g, AverageMode mode) {
  field.check(pm.mesh, "micro::average_micro_field");
  const auto& rule = fem::triangle_rule(2);
  return average<Vec2>(pm, g, mode, [&](int t) {
    Vec2 s{};
    const double a = pm.mesh.triangle_area(t);
    for (const auto& q : rule) s += field.eval(pm.mesh, t, q.bary) * (q.weight * a);
    return s;
  });
}

}  // namespace snpp::micro
