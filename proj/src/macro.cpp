#include "snpp/macro.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace snpp::macro {

namespace {

constexpr double kExpTol = 1e-12;

bool same(double a, double b) { return std::abs(a - b) <= kExpTol; }

double entropy(const fem::Vector& w, const fem::Vector& c) {
  double e = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    if (c[i] > 0.0) e += w[i] * c[i] * std::log(c[i]);
  }
  return e;
}

}  // namespace

bool ScalingRegime::admissible() const {
  const double shift = bc == BcType::Neumann ? 0.0 : 1.0;
  return beta - alpha + shift >= -kExpTol && gamma - alpha + shift >= -kExpTol;
}

std::string ScalingRegime::describe() const {
  std::ostringstream os;
  os << (bc == BcType::Neumann ? "Neumann" : "Dirichlet") << "(alpha=" << alpha << ", beta=" << beta
     << ", gamma=" << gamma << ')';
  return os.str();
}

const char* to_string(PotentialModel m) {
  return m == PotentialModel::EllipticPoisson ? "EllipticPoisson" : "AlgebraicLocal";
}
const char* to_string(DarcyForcing m) { return m == DarcyForcing::WithElectrostatic ? "WithElectrostatic" : "Plain"; }
const char* to_string(NpDrift m) { return m == NpDrift::WithDrift ? "WithDrift" : "None"; }

MacroModelClass classify_regime(const ScalingRegime& r) {
  if (!std::isfinite(r.alpha) || !std::isfinite(r.beta) || !std::isfinite(r.gamma) || !r.admissible()) {
    const char* cond = r.bc == BcType::Neumann ? "beta - alpha >= 0 and gamma - alpha >= 0"
                                               : "beta - alpha + 1 >= 0 and gamma - alpha + 1 >= 0";
    throw Error(ErrorCode::InadmissibleScaling, "macro::classify_regime",
                r.describe() + " violates " + cond + "; no limit model applies");
  }
  MacroModelClass c;
  if (r.bc == BcType::Neumann) {
    c.potential = PotentialModel::EllipticPoisson;
    c.darcy = same(r.beta, r.alpha) ? DarcyForcing::WithElectrostatic : DarcyForcing::Plain;
    c.drift = same(r.gamma, r.alpha) ? NpDrift::WithDrift : NpDrift::None;
  } else {
    c.potential = PotentialModel::AlgebraicLocal;
    c.darcy = DarcyForcing::Plain;
    c.drift = NpDrift::None;
  }
  return c;
}

MacroSolver::MacroSolver(std::shared_ptr<const mesh::TriMesh> m, cell::EffectiveCoefficients coeffs,
                         ScalingRegime regime)
    : mesh_(std::move(m)), coeffs_(coeffs), regime_(regime), model_(classify_regime(regime)) {
  const auto& mesh = *mesh_;
  const int n = mesh.num_nodes();
  weights_ = fem::assemble_basis_integrals(mesh);
  mass_ = fem::assemble_mass(mesh);
  stiff_d_ = fem::assemble_stiffness(mesh, coeffs_.D);
  if (model_.potential == PotentialModel::EllipticPoisson) {
    auto sys = fem::apply_zero_mean(fem::make_system(stiff_d_, fem::Vector::Zero(n)), weights_);
    poisson_ = std::make_shared<const fem::FactoredSystem>(std::move(sys));
  }
  double kmax = 0.0;
  for (double v : coeffs_.K.a) kmax = std::max(kmax, std::abs(v));
  if (kmax > 0.0) {
    auto sys = fem::apply_zero_mean(fem::make_system(fem::assemble_stiffness(mesh, coeffs_.K), fem::Vector::Zero(n)),
                                    weights_);
    darcy_ = std::make_shared<const fem::FactoredSystem>(std::move(sys));
  }
}

fem::Vector MacroSolver::solve_poisson(const fem::Vector& cp, const fem::Vector& cm) const {
  const char* op = "macro::solve_macro_poisson";
  if (!poisson_) throw Error(ErrorCode::InvalidArgument, op, "not a Neumann regime");
  if (cp.size() != mesh_->num_nodes() || cm.size() != mesh_->num_nodes()) {
    throw Error(ErrorCode::FieldMeshMismatch, op, "concentration size differs from mesh node count");
  }
  const fem::Vector rhs = coeffs_.porosity * (mass_ * (cp - cm)) + coeffs_.sigma_bar * weights_;
  const double net = rhs.sum();
  if (std::abs(net) > 1e-8) {
    std::ostringstream msg;
    msg << "integrated source " << net << " (net charge not balanced by surface charge)";
    throw Error(ErrorCode::IncompatibleSource, op, msg.str());
  }
  return poisson_->solve(rhs);
}

fem::Vector MacroSolver::potential(const fem::Vector& cp, const fem::Vector& cm) const {
  if (model_.potential == PotentialModel::EllipticPoisson) return solve_poisson(cp, cm);
  return eval_macro_potential_dirichlet(cp, cm, coeffs_, regime_);
}

std::pair<fem::Vector, fem::VectorField> MacroSolver::darcy_with_forcing(const std::vector<Vec2>& f) const {
  const auto& mesh = *mesh_;
  if (static_cast<int>(f.size()) != mesh.num_triangles()) {
    throw Error(ErrorCode::FieldMeshMismatch, "macro::solve_macro_darcy", "forcing is not one vector per triangle");
  }
  fem::VectorField v = fem::VectorField::constant_p0(mesh, {});
  const bool zero = std::all_of(f.begin(), f.end(), [](const Vec2& x) { return x.x == 0.0 && x.y == 0.0; });
  if (!darcy_ || zero) return {fem::Vector::Zero(mesh.num_nodes()), std::move(v)};
  std::vector<Vec2> kf(f.size());
  for (std::size_t t = 0; t < f.size(); ++t) kf[t] = coeffs_.K.apply(f[t]);
  const fem::Vector p = darcy_->solve(-fem::assemble_gradient_load(mesh, kf));
  const auto gp = fem::gradient_p0(mesh, p);
  for (int t = 0; t < mesh.num_triangles(); ++t) v.values[t] = coeffs_.K.apply(gp[t] + f[t]) * -1.0;
  return {p, std::move(v)};
}

std::pair<fem::Vector, fem::VectorField> MacroSolver::darcy(const fem::Vector& cp, const fem::Vector& cm,
                                                            const fem::Vector& phi) const {
  const auto& mesh = *mesh_;
  std::vector<Vec2> f(mesh.num_triangles());
  if (model_.darcy == DarcyForcing::WithElectrostatic) {
    const auto g = fem::gradient_p0(mesh, phi);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const auto& tri = mesh.triangles[t];
      double rho = 0.0;
      for (int k = 0; k < 3; ++k) rho += (cp[tri[k]] - cm[tri[k]]) / 3.0;
      f[t] = g[t] * rho;
    }
  }
  return darcy_with_forcing(f);
}

std::pair<fem::Vector, fem::Vector> MacroSolver::step_np(const fem::Vector& cp, const fem::Vector& cm,
                                                         const fem::Vector& phi, const fem::VectorField& v, double dt,
                                                         bool upwind) const {
  fem::SpeciesStep st;
  st.mesh = mesh_.get();
  st.weight = coeffs_.porosity;
  st.diffusion = coeffs_.D;
  st.velocity = v.is_zero() ? nullptr : &v;
  if (model_.drift == NpDrift::WithDrift) {
    st.potential = &phi;
    st.drift_coeff = coeffs_.D;
    st.drift_scale = 1.0;
  }
  st.upwind = upwind;
  return fem::step_species(st, cp, cm, dt);
}

DiagnosticRow MacroSolver::diagnose(const MacroState& s) const {
  DiagnosticRow r;
  r.t = s.t;
  const double por = coeffs_.porosity;
  r.mass = por * weights_.dot(s.c_plus + s.c_minus);
  r.charge = por * weights_.dot(s.c_plus - s.c_minus);
  r.min_c = std::min(s.c_plus.minCoeff(), s.c_minus.minCoeff());
  r.max_c = std::max(s.c_plus.maxCoeff(), s.c_minus.maxCoeff());
  r.energy = por * (entropy(weights_, s.c_plus) + entropy(weights_, s.c_minus));
  if (model_.potential == PotentialModel::EllipticPoisson) r.energy += 0.5 * s.potential.dot(stiff_d_ * s.potential);
  r.phi_mean = weights_.dot(s.potential);
  r.p_mean = weights_.dot(s.pressure);
  r.div_residual = fem::weak_divergence(*mesh_, s.velocity);
  r.additivity_defect = ((s.c_plus + s.c_minus).array() - 1.0).abs().maxCoeff();
  return r;
}

fem::Vector solve_macro_poisson(const mesh::TriMesh& mesh, const cell::EffectiveCoefficients& coeffs,
                                const fem::Vector& cp, const fem::Vector& cm) {
  const MacroSolver s(std::make_shared<const mesh::TriMesh>(mesh), coeffs, ScalingRegime{});
  return s.solve_poisson(cp, cm);
}

fem::Vector eval_macro_potential_dirichlet(const fem::Vector& cp, const fem::Vector& cm,
                                           const cell::EffectiveCoefficients& coeffs, const ScalingRegime& regime) {
  if (cp.size() != cm.size()) {
    throw Error(ErrorCode::FieldMeshMismatch, "macro::eval_macro_potential_dirichlet", "species size mismatch");
  }
  fem::Vector phi = coeffs.dirichlet_mean * (cp - cm);
  if (same(regime.alpha, 2.0)) phi.array() += coeffs.porosity * regime.phi_d;
  return phi;
}

MacroRun run_macro(const MacroProblem& pb, const MacroObserver& observer) {
  const char* op = "macro::run_macro";
  if (!pb.mesh) throw Error(ErrorCode::InvalidArgument, op, "mesh missing");
  const int n = pb.mesh->num_nodes();
  if (pb.c_plus0.size() != n || pb.c_minus0.size() != n) {
    throw Error(ErrorCode::FieldMeshMismatch, op, "initial data size differs from mesh node count");
  }
  const double lo = std::min(pb.c_plus0.minCoeff(), pb.c_minus0.minCoeff());
  const double hi = std::max(pb.c_plus0.maxCoeff(), pb.c_minus0.maxCoeff());
  if (lo < 0.0 || hi > pb.lambda) {
    throw Error(ErrorCode::InvalidArgument, op, "initial data must lie in [0, lambda]");
  }
  if (!(pb.T > 0.0)) throw Error(ErrorCode::InvalidArgument, op, "T must be positive");
  const MacroSolver solver(pb.mesh, pb.coeffs, pb.regime);
  double dt = pb.dt;
  if (dt <= 0.0) {
    const double h = mesh::mesh_quality_report(*pb.mesh).h_max;
    dt = 0.25 * h * h;
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(pb.T / dt - 1e-9)));
  dt = pb.T / steps;

  MacroRun run;
  run.diagnostics.lambda = pb.lambda;
  run.diagnostics.additive_start = ((pb.c_plus0 + pb.c_minus0).array() - 1.0).abs().maxCoeff() <= 1e-12;
  run.diagnostics.zero_mean_potential = solver.model().potential == PotentialModel::EllipticPoisson;

  MacroState s;
  s.t = 0.0;
  s.c_plus = pb.c_plus0;
  s.c_minus = pb.c_minus0;
  s.potential = solver.potential(s.c_plus, s.c_minus);
  std::tie(s.pressure, s.velocity) = solver.darcy(s.c_plus, s.c_minus, s.potential);
  run.diagnostics.rows.push_back(solver.diagnose(s));
  if (observer) observer(s, 0);

  const bool decoupled = solver.model().decoupled();
  for (int step = 1; step <= steps; ++step) {
    fem::Vector cp_it = s.c_plus, cm_it = s.c_minus;
    fem::Vector phi = s.potential, p = s.pressure;
    fem::VectorField v = s.velocity;
    int iters = 0;
    bool converged = false;
    for (iters = 1; iters <= pb.fp_max; ++iters) {
      if (iters > 1) {
        phi = solver.potential(cp_it, cm_it);
        std::tie(p, v) = solver.darcy(cp_it, cm_it, phi);
      }
      auto [cp_new, cm_new] = solver.step_np(s.c_plus, s.c_minus, phi, v, dt, pb.upwind);
      const double change =
          std::max((cp_new - cp_it).cwiseAbs().maxCoeff(), (cm_new - cm_it).cwiseAbs().maxCoeff());
      cp_it = std::move(cp_new);
      cm_it = std::move(cm_new);
      if (decoupled || change <= pb.fp_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw Error(ErrorCode::FixedPointDivergence, op,
                  "coupling iteration did not settle within " + std::to_string(pb.fp_max) + " sweeps at t=" +
                      std::to_string(s.t + dt));
    }
    s.t = step * dt;
    s.c_plus = std::move(cp_it);
    s.c_minus = std::move(cm_it);
    // Report the potential and flow consistent with the accepted concentrations.
    s.potential = solver.potential(s.c_plus, s.c_minus);
    std::tie(s.pressure, s.velocity) = solver.darcy(s.c_plus, s.c_minus, s.potential);
    DiagnosticRow row = solver.diagnose(s);
    row.fp_iters = iters;
    run.diagnostics.rows.push_back(row);
    if (observer) observer(s, step);
  }
  run.final_state = std::move(s);
  run.steps = steps;
  return run;
}

}  // namespace snpp::macro
