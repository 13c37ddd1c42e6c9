// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "golden.hpp"
#include "snpp/cli.hpp"
#include "snpp/verify.hpp"

using namespace snpp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

mesh::UnitCellGeometry disk_cell(double h) {
  mesh::UnitCellGeometry g;
  g.inclusion = mesh::Disk{};
  g.target_h = h;
  return g;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("snpp_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// 1. Empty inclusion.
Outcome empty_inclusion() {
  mesh::UnitCellGeometry g;
  const auto c = cell::compute_effective_coefficients(g, 0.0);
  double dev = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) dev = std::max(dev, std::abs(c.D(i, j) - (i == j ? 1.0 : 0.0)));
  }
  const double pdev = std::abs(c.porosity - 1.0);
  return {dev <= 1e-10 && pdev <= 1e-12, fmt("max|D-I|=%.2e |porosity-1|=%.2e", dev, pdev)};
}

// 2. Tensor structure for the r = 0.25 disk at h = 0.025.
Outcome tensor_structure() {
  auto m = std::make_shared<const mesh::TriMesh>(mesh::generate_unit_cell_mesh(disk_cell(0.025)));
  const auto ss = cell::solve_scalar_cell_problems(m);
  const Tensor2 D = cell::compute_diffusion_tensor(ss);
  const Tensor2 De = cell::diffusion_tensor_energy(ss);
  const auto st = cell::solve_stokes_cell_problems(m);
  const Tensor2 K = cell::compute_permeability_tensor(st);
  const Tensor2 Ke = cell::permeability_tensor_energy(st);
  const double fluid = 1.0 - kPi / 16.0;

  auto sym = [](const Tensor2& t) { return std::abs(t(0, 1) - t(1, 0)) / std::abs(t.trace()); };
  auto off = [](const Tensor2& t) { return std::max(std::abs(t(0, 1)), std::abs(t(1, 0))) / std::abs(t.trace()); };
  auto agree = [](const Tensor2& a, const Tensor2& b) {
    double d = 0.0;
    for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(a.a[i] - b.a[i]));
    return d / std::abs(b.trace());
  };
  const bool pd = D.sym_eigenvalues()[0] > 0.0 && K.sym_eigenvalues()[0] > 0.0;
  const double s = std::max(sym(D), sym(K)), o = std::max(off(D), off(K));
  const double e = std::max(agree(D, De), agree(K, Ke));
  const bool range = D(0, 0) > 0.0 && D(0, 0) < fluid;
  return {pd && s <= 1e-8 && o <= 1e-8 && e <= 1e-6 && range,
          fmt("D11=%.6f K11=%.6f asym=%.1e offdiag/tr=%.1e avg-vs-energy=%.1e pd=%d", D(0, 0), K(0, 0), s, o, e, pd)};
}

// 3. Golden values.
Outcome golden() {
  const auto g = read_golden(golden_path());
  const auto c = cell::compute_effective_coefficients(disk_cell(0.025), 0.0);
  const double ed = rel(c.D(0, 0), g.at("d")), ek = rel(c.K(0, 0), g.at("k")), em = rel(c.dirichlet_mean, g.at("m"));
  const double worst = std::max({ed, ek, em});
  return {worst <= 5e-3, fmt("d=%.6f (%.2e) k=%.6f (%.2e) m=%.6f (%.2e)", c.D(0, 0), ed, c.K(0, 0), ek,
                             c.dirichlet_mean, em)};
}

// 4. Manufactured macro Poisson, -Lap phi = cos(pi x), phi = cos(pi x) / pi^2.
Outcome manufactured_poisson() {
  cell::EffectiveCoefficients co;
  std::vector<double> err;
  for (int n : {10, 20, 40}) {
    const auto m = mesh::generate_rectangle_mesh({}, n, n);
    const fem::Vector rho = fem::interpolate_fn(m, [](const Vec2& x) { return std::cos(kPi * x.x); });
    const fem::Vector phi = macro::solve_macro_poisson(m, co, rho, fem::Vector::Zero(m.num_nodes()));
    const fem::Vector e =
        phi - fem::interpolate_fn(m, [](const Vec2& x) { return std::cos(kPi * x.x) / (kPi * kPi); });
    err.push_back(std::sqrt(e.dot(fem::assemble_mass(m) * e)));
  }
  const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
  return {std::min(p1, p2) >= 1.9, fmt("L2 errors %.3e %.3e %.3e, orders %.3f %.3f", err[0], err[1], err[2], p1, p2)};
}

std::shared_ptr<const mesh::PerforatedMesh> perforated(double eps, double h) {
  mesh::PerforatedDomain dom;
  dom.eps = eps;
  dom.cell = disk_cell(0.05);
  return std::make_shared<const mesh::PerforatedMesh>(mesh::generate_perforated_mesh(dom, h));
}

double worst_drift(const RunDiagnostics& d) {
  const double m0 = d.rows.front().mass;
  double w = 0.0;
  for (const auto& r : d.rows) w = std::max(w, std::abs(r.mass - m0) / m0);
  return w;
}

double worst_decay_gap(const RunDiagnostics& d) {
  const double q0 = d.rows.front().charge;
  double w = 0.0;
  for (const auto& r : d.rows) w = std::max(w, std::abs(r.charge / q0 - std::exp(-2.0 * r.t)));
  return w;
}

macro::ScalingRegime dirichlet_211() {
  macro::ScalingRegime r;
  r.bc = macro::BcType::Dirichlet;
  r.alpha = 2;
  r.beta = 1;
  r.gamma = 1;
  r.phi_d = 1.0;
  return r;
}

// 5. Conservation: mass over 100 steps (macro and micro, coupled Neumann 0,0,0) and
// total-charge decay against exp(-2t) on refined no-drift runs (Dirichlet 2,1,1).
Outcome conservation() {
  const auto co = cell::compute_effective_coefficients(disk_cell(0.05), 0.0);
  verify::BlobData blob;

  auto mm = std::make_shared<const mesh::TriMesh>(mesh::generate_rectangle_mesh({}, 32, 32));
  macro::MacroProblem mp;
  mp.mesh = mm;
  mp.coeffs = co;
  std::tie(mp.c_plus0, mp.c_minus0) = blob.sample(*mm);
  mp.dt = 1e-3;
  mp.T = 0.1;
  const auto mr = macro::run_macro(mp);

  auto pm = perforated(0.5, 0.0625);
  micro::MicroProblem up;
  up.pmesh = pm;
  std::tie(up.c_plus0, up.c_minus0) = blob.sample(pm->mesh);
  up.dt = 1e-3;
  up.T = 0.1;
  const auto ur = micro::run_micro(up);

  verify::BlobData charged;
  charged.neutral = false;
  macro::MacroProblem dp;
  dp.mesh = mm;
  dp.coeffs = co;
  dp.regime = dirichlet_211();
  std::tie(dp.c_plus0, dp.c_minus0) = charged.sample(*mm);
  dp.dt = 1e-4;
  dp.T = 0.2;
  const auto dr = macro::run_macro(dp);

  micro::MicroProblem du;
  du.pmesh = pm;
  du.regime = dirichlet_211();
  std::tie(du.c_plus0, du.c_minus0) = charged.sample(pm->mesh);
  du.dt = 2.5e-4;
  du.T = 0.05;
  const auto dur = micro::run_micro(du);

  const bool steps = mr.steps == 100 && ur.steps == 100;
  const double drift = std::max(worst_drift(mr.diagnostics), worst_drift(ur.diagnostics));
  const double gap = std::max(worst_decay_gap(dr.diagnostics), worst_decay_gap(dur.diagnostics));
  return {steps && drift <= 1e-9 && gap <= 1e-3,
          fmt("mass drift macro %.1e micro %.1e (100 steps); |Q/Q0-exp(-2t)| macro %.1e micro %.1e",
              worst_drift(mr.diagnostics), worst_drift(ur.diagnostics), worst_decay_gap(dr.diagnostics),
              worst_decay_gap(dur.diagnostics))};
}

// 6. Positivity and boundedness at dt = h^2/4 with additive data.
Outcome positivity() {
  const auto co = cell::compute_effective_coefficients(disk_cell(0.05), 0.0);
  verify::BlobData blob;
  blob.amplitude = 0.49;
  blob.width = {0.1, 0.1};

  auto mm = std::make_shared<const mesh::TriMesh>(mesh::generate_rectangle_mesh({}, 32, 32));
  macro::MacroProblem mp;
  mp.mesh = mm;
  mp.coeffs = co;
  std::tie(mp.c_plus0, mp.c_minus0) = blob.sample(*mm);
  mp.T = 0.1;
  const auto mr = macro::run_macro(mp);

  auto pm = perforated(0.5, 0.0625);
  micro::MicroProblem up;
  up.pmesh = pm;
  std::tie(up.c_plus0, up.c_minus0) = blob.sample(pm->mesh);
  up.T = 0.05;
  const auto ur = micro::run_micro(up);

  double lo = 1e300, hi = -1e300;
  bool additive = true;
  for (const auto* d : {&mr.diagnostics, &ur.diagnostics}) {
    additive = additive && d->additive_start;
    for (const auto& r : d->rows) {
      lo = std::min(lo, r.min_c);
      hi = std::max(hi, r.max_c);
    }
  }
  return {additive && lo >= -1e-6 && hi <= 1.0 + 1e-6,
          fmt("min c=%.3e max c=%.6f over %d macro + %d micro steps", lo, hi, mr.steps, ur.steps)};
}

// 7. Classifier fixtures.
Outcome classifier() {
  int ok = 0, total = 0;
  for (const auto& f : regime_fixtures()) {
    ++total;
    try {
      const auto c = macro::classify_regime(f.regime);
      if (f.expected && *f.expected == c) ++ok;
    } catch (const Error& e) {
      if (!f.expected && e.code() == ErrorCode::InadmissibleScaling) ++ok;
    }
  }
  return {ok == total && total == 8, fmt("%d/%d fixtures", ok, total)};
}

cli::RunConfig headline_config(const fs::path& dir) {
  cli::RunConfig c;
  c.command = cli::Command::Converge;
  c.cell = disk_cell(0.025);
  c.eps_list = {0.5, 0.25, 0.125};
  c.T = 0.1;
  c.dt = 1e-3;
  c.macro_n = 64;
  c.threads = 3;
  c.output.directory = dir.string();
  return c;
}

std::string study_summary(const std::string& csv) {
  std::string s;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) s += "\n      " + line;
  return s;
}

// 8. Headline Neumann study (through the CLI path so the CSV can be compared in 10).
Outcome headline(const fs::path& dir) {
  std::ostringstream out, err;
  const int rc = cli::execute(headline_config(dir), {}, out, err);
  const std::string csv = slurp(dir / "study.csv");
  return {rc == cli::kOk, fmt("exit %d%s", rc, err.str().c_str()) + study_summary(csv)};
}

// 9. Dirichlet branch.
Outcome dirichlet_study() {
  verify::StudyConfig c;
  c.regime = dirichlet_211();
  c.cell = disk_cell(0.025);
  c.eps_list = {0.5, 0.25};
  c.data.neutral = false;
  const auto s = verify::run_convergence_study(c);
  const auto& a = s.rows[0];
  const auto& b = s.rows[1];
  const bool dec = b.e_phi < a.e_phi && b.e_c_plus < a.e_c_plus && b.e_c_minus < a.e_c_minus;
  return {dec, fmt("e_phi %.3e -> %.3e, e_c+ %.3e -> %.3e, e_c- %.3e -> %.3e, e_v %.1e -> %.1e", a.e_phi, b.e_phi,
                   a.e_c_plus, b.e_c_plus, a.e_c_minus, b.e_c_minus, a.e_v, b.e_v)};
}

// 10. Determinism: rerun the identical headline config, compare CSV bytes.
Outcome determinism(const fs::path& first, const fs::path& dir) {
  std::ostringstream out, err;
  cli::execute(headline_config(dir), {}, out, err);
  const std::string a = slurp(first / "study.csv"), b = slurp(dir / "study.csv");
  return {!a.empty() && a == b, fmt("%zu bytes, %s", a.size(), a == b ? "identical" : "differ")};
}

}  // namespace

int main() {
  const fs::path run1 = scratch("headline_1"), run2 = scratch("headline_2");
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const Criterion all[] = {
      {1, "empty inclusion: D = I, porosity 1", 1.0, empty_inclusion},
      {2, "disk r=0.25 tensor structure", 60.0, tensor_structure},
      {3, "golden d, k, m within 0.5%", 60.0, golden},
      {4, "manufactured Poisson order >= 1.9", 30.0, manufactured_poisson},
      {5, "mass drift and charge decay", 120.0, conservation},
      {6, "positivity and boundedness at dt = h^2/4", 120.0, positivity},
      {7, "regime classifier fixtures", 1.0, classifier},
      {8, "Neumann eps-convergence study", 1800.0, [&] { return headline(run1); }},
      {9, "Dirichlet eps-convergence study", 900.0, dirichlet_study},
      {10, "bit-identical repeated converge", 1800.0, [&] { return determinism(run1, run2); }},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = t <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s [%d] %s (%.1f s / %.0f s budget): %s\n", pass ? "PASS" : "FAIL", c.id, c.name, t, c.budget_s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
