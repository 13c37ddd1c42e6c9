#include "snpp/cell.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace snpp::cell {

namespace {

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

double max_abs(const Tensor2& t) {
  double m = 0.0;
  for (double v : t.a) m = std::max(m, std::abs(v));
  return m;
}

void cross_check(const Tensor2& avg, const Tensor2& energy, const char* op, const char* what) {
  double diff = 0.0;
  for (int k = 0; k < 4; ++k) diff = std::max(diff, std::abs(avg.a[k] - energy.a[k]));
  const double scale = std::max(max_abs(avg), 1e-300);
  if (diff > 1e-6 * scale) {
    std::ostringstream msg;
    msg << what << ": averaging and energy formulas differ by " << diff / scale << " (relative)";
    throw Error(ErrorCode::FormulaMismatch, op, msg.str());
  }
}

}  // namespace

ScalarCellSolutions solve_scalar_cell_problems(std::shared_ptr<const mesh::TriMesh> m) {
  const auto& mesh = *m;
  const int n = mesh.num_nodes();
  auto sys = fem::make_system(fem::assemble_stiffness(mesh), fem::Vector::Zero(n));
  sys = fem::apply_periodic(std::move(sys), mesh.periodic_pairs);
  sys = fem::apply_zero_mean(std::move(sys), fem::assemble_basis_integrals(mesh));
  const fem::FactoredSystem solver(std::move(sys));
  ScalarCellSolutions out;
  out.mesh = m;
  for (int j = 0; j < 2; ++j) {
    const Vec2 e = j == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    // Weak form of the flux condition grad phi . nu = -e . nu on Gamma.
    const fem::Vector rhs = -fem::assemble_gradient_load(mesh, std::vector<Vec2>(mesh.num_triangles(), e));
    out.phi[j] = solver.solve(rhs);
  }
  return out;
}

Tensor2 compute_diffusion_tensor(const ScalarCellSolutions& sols) {
  const auto& mesh = *sols.mesh;
  Tensor2 d = Tensor2::scalar(0.0);
  std::array<std::vector<Vec2>, 2> g{fem::gradient_p0(mesh, sols.phi[0]), fem::gradient_p0(mesh, sols.phi[1])};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.triangle_area(t);
    for (int j = 0; j < 2; ++j) {
      d(0, j) += a * ((j == 0 ? 1.0 : 0.0) + g[j][t].x);
      d(1, j) += a * ((j == 1 ? 1.0 : 0.0) + g[j][t].y);
    }
  }
  cross_check(d, diffusion_tensor_energy(sols), "cell::compute_diffusion_tensor", "D");
  return d;
}

Tensor2 diffusion_tensor_energy(const ScalarCellSolutions& sols) {
  const auto& mesh = *sols.mesh;
  Tensor2 d = Tensor2::scalar(0.0);
  std::array<std::vector<Vec2>, 2> g{fem::gradient_p0(mesh, sols.phi[0]), fem::gradient_p0(mesh, sols.phi[1])};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.triangle_area(t);
    const Vec2 u0 = Vec2{1.0, 0.0} + g[0][t];
    const Vec2 u1 = Vec2{0.0, 1.0} + g[1][t];
    d(0, 0) += a * u0.dot(u0);
    d(0, 1) += a * u0.dot(u1);
    d(1, 1) += a * u1.dot(u1);
  }
  d(1, 0) = d(0, 1);
  return d;
}

StokesCellSolutions solve_stokes_cell_problems(std::shared_ptr<const mesh::TriMesh> m, fem::StokesMethod method) {
  const auto& mesh = *m;
  if (gamma_nodes(mesh).empty()) {
    throw Error(ErrorCode::NoSolidPhase, "cell::solve_stokes_cell_problems",
                "no inclusion: the periodic Stokes cell problem has no solution");
  }
  fem::StokesBoundary bc;
  bc.no_slip = {mesh::BoundaryTag::GammaInterior};
  bc.periodic = true;
  const fem::StokesSolver solver(mesh, 1.0, bc, method);
  StokesCellSolutions out;
  out.mesh = m;
  for (int j = 0; j < 2; ++j) {
    const Vec2 e = j == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    auto sol = solver.solve(fem::VectorField::constant_p0(mesh, e));
    out.w[j] = std::move(sol.velocity);
    out.pi[j] = std::move(sol.pressure);
    out.divergence_residual = std::max(out.divergence_residual, sol.divergence_residual);
  }
  return out;
}

Tensor2 compute_permeability_tensor(const StokesCellSolutions& sols) {
  const auto& mesh = *sols.mesh;
  Tensor2 k;
  for (int j = 0; j < 2; ++j) {
    const Vec2 s = fem::integrate_velocity(mesh, sols.w[j]);
    k(0, j) = s.x;
    k(1, j) = s.y;
  }
  cross_check(k, permeability_tensor_energy(sols), "cell::compute_permeability_tensor", "K");
  return k;
}

Tensor2 permeability_tensor_energy(const StokesCellSolutions& sols) {
  const auto& mesh = *sols.mesh;
  Tensor2 k = Tensor2::scalar(0.0);
  const auto& rule = fem::triangle_rule(2);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto el = fem::p1_element(mesh, t);
    const auto& dofs = sols.w[0].p2->element_dofs[t];
    for (const auto& q : rule) {
      const auto g = fem::p2_gradients(q.bary, el);
      // Velocity gradients: rows = component, columns = derivative direction.
      std::array<std::array<Vec2, 2>, 2> grad{};
      for (int j = 0; j < 2; ++j) {
        for (int a = 0; a < 6; ++a) {
          const Vec2 v = sols.w[j].values[dofs[a]];
          grad[j][0] += g[a] * v.x;
          grad[j][1] += g[a] * v.y;
        }
      }
      const double w = q.weight * el.area;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) k(i, j) += w * (grad[i][0].dot(grad[j][0]) + grad[i][1].dot(grad[j][1]));
      }
    }
  }
  return k;
}

DirichletCellSolution solve_dirichlet_cell_problem(std::shared_ptr<const mesh::TriMesh> m) {
  const auto& mesh = *m;
  const auto fixed = gamma_nodes(mesh);
  if (fixed.empty()) {
    throw Error(ErrorCode::NoSolidPhase, "cell::solve_dirichlet_cell_problem",
                "no inclusion: -Lap phi = 1 is incompatible under periodicity");
  }
  auto sys = fem::make_system(fem::assemble_stiffness(mesh), fem::assemble_basis_integrals(mesh));
  sys = fem::apply_periodic(std::move(sys), mesh.periodic_pairs);
  sys = fem::apply_dirichlet(std::move(sys), fixed, std::vector<double>(fixed.size(), 0.0));
  DirichletCellSolution out;
  out.mesh = m;
  out.phi = fem::solve_constrained(sys, true, 1e-12);
  return out;
}

double compute_dirichlet_mean(const DirichletCellSolution& sol) {
  return fem::assemble_basis_integrals(*sol.mesh).dot(sol.phi);
}

double compute_sigma_bar(const mesh::UnitCellGeometry& geom, double sigma) {
  return sigma * geom.interface_length();
}

double reconstruct_corrector(const std::function<Vec2(const Vec2&)>& macro_grad, const ScalarCellSolutions& sols,
                             const Vec2& x, const Vec2& y) {
  return reconstruct_corrector(macro_grad(x), sols, y);
}

double reconstruct_corrector(const Vec2& g, const ScalarCellSolutions& sols, const Vec2& y) {
  const Vec2 yw{y.x - std::floor(y.x), y.y - std::floor(y.y)};
  const mesh::PointLocator locator(*sols.mesh);
  const auto hit = locator.locate(yw);
  if (!hit) {
    std::ostringstream msg;
    msg << "cell point (" << yw.x << ", " << yw.y << ") is not in the fluid part";
    throw Error(ErrorCode::PointOutsideFluidPart, "cell::reconstruct_corrector", msg.str());
  }
  const auto& tri = sols.mesh->triangles[hit->first];
  double out = 0.0;
  for (int k = 0; k < 3; ++k) {
    out += hit->second[k] * (g.x * sols.phi[0][tri[k]] + g.y * sols.phi[1][tri[k]]);
  }
  return out;
}

EffectiveCoefficients compute_effective_coefficients(const mesh::UnitCellGeometry& geom, double sigma) {
  auto m = std::make_shared<const mesh::TriMesh>(mesh::generate_unit_cell_mesh(geom));
  EffectiveCoefficients c;
  c.porosity = m->total_area();
  c.D = compute_diffusion_tensor(solve_scalar_cell_problems(m));
  c.sigma_bar = compute_sigma_bar(geom, sigma);
  if (geom.has_inclusion()) {
    c.K = compute_permeability_tensor(solve_stokes_cell_problems(m));
    c.dirichlet_mean = compute_dirichlet_mean(solve_dirichlet_cell_problem(m));
  }
  return c;
}

void write_coefficients(std::ostream& os, const EffectiveCoefficients& c, const mesh::UnitCellGeometry& geom) {
  os << std::setprecision(17);
  os << "# inclusion=" << (geom.has_inclusion() ? "disk" : "none") << '\n';
  if (geom.has_inclusion()) {
    os << "# center_x=" << geom.inclusion->center.x << '\n';
    os << "# center_y=" << geom.inclusion->center.y << '\n';
    os << "# radius=" << geom.inclusion->radius << '\n';
  }
  os << "# target_h=" << geom.target_h << '\n';
  os << "porosity=" << c.porosity << '\n';
  os << "D11=" << c.D(0, 0) << '\n' << "D12=" << c.D(0, 1) << '\n' << "D22=" << c.D(1, 1) << '\n';
  os << "K11=" << c.K(0, 0) << '\n' << "K12=" << c.K(0, 1) << '\n' << "K22=" << c.K(1, 1) << '\n';
  os << "sigma_bar=" << c.sigma_bar << '\n';
  os << "dirichlet_mean=" << c.dirichlet_mean << '\n';
}

EffectiveCoefficients read_coefficients(std::istream& is) {
  const char* op = "cell::read_coefficients";
  std::map<std::string, double> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, op, "line " + std::to_string(lineno) + ": expected key=value");
    }
    try {
      std::size_t used = 0;
      const std::string val = line.substr(eq + 1);
      kv[line.substr(0, eq)] = std::stod(val, &used);
      if (val.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, op, "line " + std::to_string(lineno) + ": bad number");
    }
  }
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::ParseError, op, std::string("missing key ") + key);
    return it->second;
  };
  EffectiveCoefficients c;
  c.porosity = get("porosity");
  c.D = Tensor2{{get("D11"), get("D12"), get("D12"), get("D22")}};
  c.K = Tensor2{{get("K11"), get("K12"), get("K12"), get("K22")}};
  c.sigma_bar = get("sigma_bar");
  c.dirichlet_mean = get("dirichlet_mean");
  return c;
}

}  // namespace snpp::cell
