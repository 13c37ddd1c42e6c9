#include "snpp/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

namespace snpp::verify {

namespace {

constexpr double kMassTol = 1e-9;
constexpr double kBoundTol = 1e-6;
constexpr double kMeanTol = 1e-8;
constexpr double kDivTol = 1e-8;
// Errors at or below this floor count as equal (both solutions exact up to roundoff).
constexpr double kErrorFloor = 1e-10;
// References with RMS below this are roundoff; errors against them are absolute.
constexpr double kNegligible = 1e-12;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

bool row_finite(const DiagnosticRow& r) {
  for (double v : {r.t, r.mass, r.charge, r.min_c, r.max_c, r.energy, r.phi_mean, r.p_mean, r.div_residual,
                   r.additivity_defect}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// P1 value at p, located in `mesh`.
struct P1Probe {
  const mesh::TriMesh& mesh;
  mesh::PointLocator loc;
  explicit P1Probe(const mesh::TriMesh& m) : mesh(m), loc(m) {}

  std::pair<int, std::array<double, 3>> find(const Vec2& p) const {
    auto hit = loc.locate(p, 1e-9);
    if (!hit) throw Error(ErrorCode::InvalidArgument, "verify::corrector_enhanced_error", "point outside macro mesh");
    return *hit;
  }
};

// Relative H1 norm of a - b over the mesh; P1 fields.
double h1_error(const mesh::TriMesh& m, const fem::Vector& a, const fem::Vector& b) {
  double num = 0.0, den = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto el = fem::p1_element(m, t);
    const auto& tri = m.triangles[t];
    Vec2 ge, gr;
    std::array<double, 3> e{}, r{};
    for (int k = 0; k < 3; ++k) {
      e[k] = a[tri[k]] - b[tri[k]];
      r[k] = a[tri[k]];
      ge += el.grad[k] * e[k];
      gr += el.grad[k] * r[k];
    }
    // exact P1 mass: area/12 * (sum^2 + sum of squares)
    double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      s1 += e[k];
      q1 += e[k] * e[k];
      s2 += r[k];
      q2 += r[k] * r[k];
    }
    const double se = el.area / 12.0 * (s1 * s1 + q1);
    const double sr = el.area / 12.0 * (s2 * s2 + q2);
    num += se + el.area * ge.dot(ge);
    den += sr + el.area * gr.dot(gr);
  }
  const double area = m.total_area();
  return den > kNegligible * kNegligible * area ? std::sqrt(num / den) : std::sqrt(num / area);
}

CorrectorErrors corrector_errors(const mesh::PerforatedMesh& pm, const fem::Vector& micro_phi,
                                 const std::function<double(const Vec2&)>& phi0,
                                 const std::function<Vec2(const Vec2&)>& grad0,
                                 const cell::ScalarCellSolutions& cs) {
  const auto& m = pm.mesh;
  const int n = m.num_nodes();
  if (micro_phi.size() != n) {
    throw Error(ErrorCode::FieldMeshMismatch, "verify::corrector_enhanced_error", "micro potential size");
  }
  if (cs.mesh->num_nodes() != pm.cell_mesh.num_nodes()) {
    throw Error(ErrorCode::FieldMeshMismatch, "verify::corrector_enhanced_error",
                "cell solutions must live on the perforated mesh's cell mesh");
  }
  fem::Vector plain(n), corr(n);
  for (int i = 0; i < n; ++i) {
    const Vec2& x = m.nodes[i];
    const Vec2 g = grad0(x);
    const int c = pm.cell_node[i];
    plain[i] = phi0(x);
    corr[i] = plain[i] + pm.eps * (cs.phi[0][c] * g.x + cs.phi[1][c] * g.y);
  }
  const fem::Vector w = fem::assemble_basis_integrals(m);
  const double area = w.sum();
  const double mu = w.dot(micro_phi) / area;
  plain.array() += mu - w.dot(plain) / area;
  corr.array() += mu - w.dot(corr) / area;
  return {h1_error(m, micro_phi, plain), h1_error(m, micro_phi, corr)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Invariant suite

bool InvariantReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* InvariantReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const std::vector<std::string>& registered_checks() {
  static const std::vector<std::string> names{"finite_values", "mass_drift",     "min_concentration",
                                              "max_concentration", "potential_mean", "pressure_mean",
                                              "divergence"};
  return names;
}

InvariantReport run_invariant_suite(const RunDiagnostics& d) {
  if (d.rows.empty()) {
    throw Error(ErrorCode::MalformedDiagnostics, "verify::run_invariant_suite", "diagnostics contain no rows");
  }
  const double inf = std::numeric_limits<double>::infinity();
  InvariantReport rep;

  bool finite = true;
  for (const auto& r : d.rows) finite = finite && row_finite(r);
  rep.checks.push_back({"finite_values", finite, finite ? 0.0 : 1.0, 0.0});

  const double m0 = d.rows.front().mass;
  double drift = 0.0;
  for (const auto& r : d.rows) {
    const double dm = std::abs(r.mass - m0);
    drift = std::max(drift, std::abs(m0) > 1e-300 ? dm / std::abs(m0) : dm);
  }
  rep.checks.push_back({"mass_drift", drift <= kMassTol, drift, kMassTol});

  double lo = inf, hi = -inf;
  for (const auto& r : d.rows) {
    lo = std::min(lo, r.min_c);
    hi = std::max(hi, r.max_c);
  }
  rep.checks.push_back({"min_concentration", lo >= -kBoundTol, lo, -kBoundTol});
  // The upper bound is only guaranteed for an additive start; otherwise reported, not enforced.
  if (d.additive_start) {
    rep.checks.push_back({"max_concentration", hi <= d.lambda + kBoundTol, hi, d.lambda + kBoundTol});
  } else {
    rep.checks.push_back({"max_concentration", true, hi, inf});
  }

  double phi = 0.0, p = 0.0, div = 0.0;
  for (const auto& r : d.rows) {
    phi = std::max(phi, std::abs(r.phi_mean));
    p = std::max(p, std::abs(r.p_mean));
    div = std::max(div, std::abs(r.div_residual));
  }
  rep.checks.push_back(
      {"potential_mean", !d.zero_mean_potential || phi <= kMeanTol, phi, d.zero_mean_potential ? kMeanTol : inf});
  rep.checks.push_back({"pressure_mean", p <= kMeanTol, p, kMeanTol});
  rep.checks.push_back({"divergence", div <= kDivTol, div, kDivTol});
  return rep;
}

void write_report(std::ostream& os, const InvariantReport& r) {
  os << std::setprecision(6);
  for (const auto& c : r.checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " tol=" << c.tolerance << '\n';
  }
}

// ---------------------------------------------------------------------------
// Data and averages

double BlobData::profile(const Vec2& x) const {
  const double dx = (x.x - center.x) / width.x;
  const double dy = (x.y - center.y) / width.y;
  return std::exp(-0.5 * (dx * dx + dy * dy));
}

std::pair<fem::Vector, fem::Vector> BlobData::sample(const mesh::TriMesh& mesh, double charge_integral) const {
  fem::Vector g(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) g[i] = profile(mesh.nodes[i]);
  double shift = 0.0;
  if (neutral) {
    const fem::Vector w = fem::assemble_basis_integrals(mesh);
    g.array() -= w.dot(g) / w.sum();
    shift = 0.5 * charge_integral / w.sum();
  }
  fem::Vector cp = (background + shift + amplitude * g.array()).matrix();
  fem::Vector cm = (background - shift - amplitude * g.array()).matrix();
  return {cp, cm};
}

double macro_charge_target(const mesh::TriMesh& m, const cell::EffectiveCoefficients& c,
                           const macro::ScalingRegime& reg) {
  if (reg.bc != macro::BcType::Neumann) return 0.0;
  return -c.sigma_bar * m.total_area() / c.porosity;
}

double micro_charge_target(const mesh::PerforatedMesh& pm, const macro::ScalingRegime& reg) {
  if (reg.bc != macro::BcType::Neumann || reg.sigma == 0.0) return 0.0;
  return -fem::assemble_boundary_load(pm.mesh, mesh::BoundaryTag::GammaInterior, pm.eps * reg.sigma).sum();
}

double relative_error(const std::vector<double>& a, const std::vector<double>& r) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += (a[i] - r[i]) * (a[i] - r[i]);
    den += r[i] * r[i];
  }
  const double n = static_cast<double>(std::max<std::size_t>(r.size(), 1));
  return den > kNegligible * kNegligible * n ? std::sqrt(num / den) : std::sqrt(num / n);
}

double relative_error(const std::vector<Vec2>& a, const std::vector<Vec2>& r) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Vec2 d = a[i] - r[i];
    num += d.dot(d);
    den += r[i].dot(r[i]);
  }
  const double n = static_cast<double>(std::max<std::size_t>(r.size(), 1));
  return den > kNegligible * kNegligible * n ? std::sqrt(num / den) : std::sqrt(num / n);
}

namespace {

int grid_cell(const mesh::TriMesh& m, int t, const micro::CoarseGrid& g) {
  const Vec2 c = m.centroid(t);
  const int ix = std::clamp(static_cast<int>((c.x - g.rect.lo.x) / g.rect.width() * g.nx), 0, g.nx - 1);
  const int iy = std::clamp(static_cast<int>((c.y - g.rect.lo.y) / g.rect.height() * g.ny), 0, g.ny - 1);
  return ix + g.nx * iy;
}

}  // namespace

std::vector<double> macro_cell_averages(const mesh::TriMesh& m, const fem::Vector& u, const micro::CoarseGrid& g) {
  std::vector<double> sum(g.nx * g.ny, 0.0), area(g.nx * g.ny, 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const int id = grid_cell(m, t, g);
    const auto& tri = m.triangles[t];
    const double a = m.triangle_area(t);
    sum[id] += a * (u[tri[0]] + u[tri[1]] + u[tri[2]]) / 3.0;
    area[id] += a;
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= area[i];
  return sum;
}

std::vector<Vec2> macro_cell_averages(const mesh::TriMesh& m, const std::vector<Vec2>& v,
                                      const micro::CoarseGrid& g) {
  std::vector<Vec2> sum(g.nx * g.ny);
  std::vector<double> area(g.nx * g.ny, 0.0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const int id = grid_cell(m, t, g);
    const double a = m.triangle_area(t);
    sum[id] += v[t] * a;
    area[id] += a;
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = sum[i] * (1.0 / area[i]);
  return sum;
}

// ---------------------------------------------------------------------------
// Corrector

CorrectorErrors corrector_enhanced_error(const mesh::PerforatedMesh& pm, const fem::Vector& micro_phi,
                                         const mesh::TriMesh& macro_mesh, const fem::Vector& macro_phi,
                                         const cell::ScalarCellSolutions& cs) {
  const P1Probe probe(macro_mesh);
  const fem::VectorField grad = fem::recover_gradient(macro_mesh, macro_phi);
  auto value = [&](const Vec2& x) {
    const auto [t, l] = probe.find(x);
    const auto& tri = macro_mesh.triangles[t];
    return l[0] * macro_phi[tri[0]] + l[1] * macro_phi[tri[1]] + l[2] * macro_phi[tri[2]];
  };
  auto gradient = [&](const Vec2& x) {
    const auto [t, l] = probe.find(x);
    return grad.eval(macro_mesh, t, l);
  };
  return corrector_errors(pm, micro_phi, value, gradient, cs);
}

CorrectorErrors corrector_enhanced_error(const mesh::PerforatedMesh& pm, const fem::Vector& micro_phi,
                                         const std::function<double(const Vec2&)>& phi0,
                                         const std::function<Vec2(const Vec2&)>& grad_phi0,
                                         const cell::ScalarCellSolutions& cs) {
  return corrector_errors(pm, micro_phi, phi0, grad_phi0, cs);
}

// ---------------------------------------------------------------------------
// Convergence study

int default_thread_count() {
  if (const char* env = std::getenv("SNPP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void validate(const StudyConfig& cfg) {
  const char* op = "verify::run_convergence_study";
  macro::classify_regime(cfg.regime);
  if (cfg.eps_list.empty()) throw Error(ErrorCode::InvalidArgument, op, "empty eps list");
  for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
    const double e = cfg.eps_list[i];
    if (!(e > 0.0 && e <= 1.0)) throw Error(ErrorCode::InvalidArgument, op, "eps must lie in (0, 1]");
    if (i > 0 && !(e < cfg.eps_list[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, op, "eps list must be strictly decreasing");
    }
    const double k = 1.0 / e;
    const double per = std::round(cfg.domain.width() * k);
    if (std::abs(per - cfg.domain.width() * k) > 1e-9 || cfg.macro_n % static_cast<int>(per) != 0) {
      throw Error(ErrorCode::GridMisaligned, op, "macro_n must be a multiple of the number of eps-cells");
    }
  }
  if (!(cfg.T > 0.0) || !(cfg.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, op, "T and dt must be positive");
}

}  // namespace

ConvergenceStudy run_convergence_study(const StudyConfig& cfg) {
  validate(cfg);
  const auto& reg = cfg.regime;
  const bool neumann = reg.bc == macro::BcType::Neumann;

  ConvergenceStudy study;
  study.regime = reg;
  study.geometry = cfg.cell;
  study.coeffs = cell::compute_effective_coefficients(cfg.cell, reg.sigma);
  const auto& co = study.coeffs;

  // Macro limit, shared by every eps.
  auto mm = std::make_shared<const mesh::TriMesh>(mesh::generate_rectangle_mesh(cfg.domain, cfg.macro_n, cfg.macro_n));
  macro::MacroProblem mp;
  mp.mesh = mm;
  mp.coeffs = co;
  mp.regime = reg;
  mp.T = cfg.T;
  mp.dt = cfg.dt;
  mp.lambda = cfg.lambda;
  std::tie(mp.c_plus0, mp.c_minus0) = cfg.data.sample(*mm, macro_charge_target(*mm, co, reg));
  const macro::MacroRun mr = macro::run_macro(mp);
  const macro::MacroState& ms = mr.final_state;

  const int n = static_cast<int>(cfg.eps_list.size());
  std::vector<StudyRow> rows(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_one = [&](int i) {
    const double eps = cfg.eps_list[i];
    const double h = cfg.h_factor * eps;
    mesh::PerforatedDomain dom;
    dom.outer = cfg.domain;
    dom.eps = eps;
    dom.cell = cfg.cell;
    auto pm = std::make_shared<const mesh::PerforatedMesh>(mesh::generate_perforated_mesh(dom, h));

    micro::MicroProblem p;
    p.pmesh = pm;
    p.regime = reg;
    p.T = cfg.T;
    p.dt = cfg.dt;
    p.lambda = cfg.lambda;
    std::tie(p.c_plus0, p.c_minus0) = cfg.data.sample(pm->mesh, micro_charge_target(*pm, reg));
    const micro::MicroRun r = micro::run_micro(p);
    const micro::MicroState& s = r.final_state;

    const micro::CoarseGrid grid{cfg.domain, pm->cells_x, pm->cells_y};
    StudyRow row;
    row.eps = eps;
    row.h = h;
    row.micro_steps = r.steps;
    row.e_c_plus = relative_error(micro::average_micro_field(*pm, s.c_plus, grid, micro::AverageMode::FluidMean),
                                  macro_cell_averages(*mm, ms.c_plus, grid));
    row.e_c_minus = relative_error(micro::average_micro_field(*pm, s.c_minus, grid, micro::AverageMode::FluidMean),
                                   macro_cell_averages(*mm, ms.c_minus, grid));
    if (neumann) {
      // tilde rescaling eps^alpha Phi_eps
      const fem::Vector tilde = std::pow(eps, reg.alpha) * s.potential;
      row.e_phi = relative_error(micro::average_micro_field(*pm, tilde, grid, micro::AverageMode::FluidMean),
                                 macro_cell_averages(*mm, ms.potential, grid));
      if (cfg.corrector) {
        const auto cs = cell::solve_scalar_cell_problems(std::make_shared<const mesh::TriMesh>(pm->cell_mesh));
        const auto ce = corrector_enhanced_error(*pm, tilde, *mm, ms.potential, cs);
        row.e_phi_h1 = ce.plain;
        row.e_phi_h1_corrected = ce.corrected;
      } else {
        row.e_phi_h1 = row.e_phi_h1_corrected = kNaN;
      }
    } else {
      // hom rescaling eps^(alpha-2) (Phi_eps - Phi_D) against m (c+ - c-)
      const fem::Vector hom = std::pow(eps, reg.alpha - 2.0) * (s.potential.array() - reg.phi_d).matrix();
      const fem::Vector ref = co.dirichlet_mean * (ms.c_plus - ms.c_minus);
      row.e_phi = relative_error(micro::average_micro_field(*pm, hom, grid, micro::AverageMode::CellIntegral),
                                 macro_cell_averages(*mm, ref, grid));
      row.e_phi_h1 = row.e_phi_h1_corrected = kNaN;
    }
    row.e_v = relative_error(micro::average_micro_field(*pm, s.velocity, grid, micro::AverageMode::CellIntegral),
                             macro_cell_averages(*mm, ms.velocity.values, grid));
    rows[i] = row;
  };

  const int workers = std::min(n, cfg.threads > 0 ? cfg.threads : default_thread_count());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        run_one(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (int i = 0; i < n; ++i) {
    rows[i].observed_order = kNaN;
    if (i > 0 && rows[i].e_c_plus > 0.0 && rows[i - 1].e_c_plus > 0.0) {
      rows[i].observed_order = std::log(rows[i - 1].e_c_plus / rows[i].e_c_plus) /
                               std::log(rows[i - 1].eps / rows[i].eps);
    }
  }
  study.rows = rows;

  auto decreasing = [&](double StudyRow::*f) {
    for (int i = 1; i < n; ++i) {
      const double prev = rows[i - 1].*f, cur = rows[i].*f;
      if (!std::isfinite(cur)) return false;
      if (prev <= kErrorFloor && cur <= kErrorFloor) continue;
      if (!(cur < prev)) return false;
    }
    return true;
  };
  if (!decreasing(&StudyRow::e_c_plus)) study.non_monotone.push_back("e_c_plus");
  if (!decreasing(&StudyRow::e_c_minus)) study.non_monotone.push_back("e_c_minus");
  if (!decreasing(&StudyRow::e_phi)) study.non_monotone.push_back("e_phi");
  if (!decreasing(&StudyRow::e_v)) study.non_monotone.push_back("e_v");
  for (const auto& r : rows) {
    if (std::isfinite(r.e_phi_h1) && !(r.e_phi_h1_corrected <= r.e_phi_h1)) {
      study.corrector_failures.push_back(r.eps);
    }
  }
  return study;
}

void write_study_csv(std::ostream& os, const ConvergenceStudy& s) {
  os << std::setprecision(17);
  os << "eps,h,e_c_plus,e_c_minus,e_phi,e_v,observed_order,e_phi_h1,e_phi_h1_corrected\n";
  for (const auto& r : s.rows) {
    os << r.eps << ',' << r.h << ',' << r.e_c_plus << ',' << r.e_c_minus << ',' << r.e_phi << ',' << r.e_v << ','
       << r.observed_order << ',' << r.e_phi_h1 << ',' << r.e_phi_h1_corrected << '\n';
  }
}

}  // namespace snpp::verify
