#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "snpp/cell.hpp"
#include "snpp/diagnostics.hpp"
#include "snpp/macro.hpp"
#include "snpp/micro.hpp"

namespace snpp::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
};

struct InvariantReport {
  std::vector<CheckResult> checks;

  bool all_passed() const;
  const CheckResult* find(const std::string& name) const;
};

/// Names of every check run_invariant_suite emits, in order.
const std::vector<std::string>& registered_checks();

/// Throws MalformedDiagnostics on an empty run. Failures are report entries.
InvariantReport run_invariant_suite(const RunDiagnostics& d);
void write_report(std::ostream& os, const InvariantReport& r);

/// Initial concentrations as functions of x. With `neutral`, the charge is
/// shifted to zero mean on each mesh separately (Neumann compatibility).
struct BlobData {
  Vec2 center{0.4, 0.6};
  Vec2 width{0.15, 0.15};
  double amplitude = 0.4;
  double background = 0.5;
  bool neutral = true;

  double profile(const Vec2& x) const;
  /// c+ and c- on the nodes of `mesh`. A neutral sample has its charge integral
  /// set to `charge_integral` (nonzero when a surface charge must be balanced).
  std::pair<fem::Vector, fem::Vector> sample(const mesh::TriMesh& mesh, double charge_integral = 0.0) const;
};

struct StudyConfig {
  macro::ScalingRegime regime;
  mesh::UnitCellGeometry cell;  // inclusion and cell-problem resolution for D, K, m
  mesh::Rectangle domain;
  std::vector<double> eps_list{0.5, 0.25, 0.125};
  double h_factor = 0.125;  // micro h = h_factor * eps
  double T = 0.1;
  double dt = 1e-3;
  int macro_n = 64;  // macro squares per side; multiple of every 1/eps
  double lambda = 1.0;
  BlobData data;
  bool corrector = true;
  int threads = 0;  // 0: SNPP_THREADS, else hardware concurrency
};

struct StudyRow {
  double eps = 0.0;
  double h = 0.0;
  double e_c_plus = 0.0;
  double e_c_minus = 0.0;
  double e_phi = 0.0;
  double e_v = 0.0;
  double observed_order = 0.0;  // of e_c_plus against the previous row; NaN on the first
  double e_phi_h1 = 0.0;        // plain H1 potential error over the fluid part (NaN if not computed)
  double e_phi_h1_corrected = 0.0;
  int micro_steps = 0;
};

struct ConvergenceStudy {
  macro::ScalingRegime regime;
  mesh::UnitCellGeometry geometry;
  cell::EffectiveCoefficients coeffs;
  std::vector<StudyRow> rows;
  /// Fields whose error fails to decrease strictly; empty when monotone.
  std::vector<std::string> non_monotone;
  /// Rows where the corrector did not reduce the H1 error.
  std::vector<double> corrector_failures;

  bool monotone() const { return non_monotone.empty(); }
  bool corrector_ok() const { return corrector_failures.empty(); }
};

/// Charge integral that balances the surface charge on a macro mesh / perforated mesh
/// (Neumann branch; zero otherwise).
double macro_charge_target(const mesh::TriMesh& m, const cell::EffectiveCoefficients& c,
                           const macro::ScalingRegime& reg);
double micro_charge_target(const mesh::PerforatedMesh& pm, const macro::ScalingRegime& reg);

/// Relative discrete L2 error over equal-area cells; absolute (RMS) when the reference RMS is below 1e-12.
double relative_error(const std::vector<double>& approx, const std::vector<double>& ref);
double relative_error(const std::vector<Vec2>& approx, const std::vector<Vec2>& ref);

/// Cell averages of a macro P1 field / P0 field on an aligned nx x ny grid.
std::vector<double> macro_cell_averages(const mesh::TriMesh& mesh, const fem::Vector& u, const micro::CoarseGrid& g);
std::vector<Vec2> macro_cell_averages(const mesh::TriMesh& mesh, const std::vector<Vec2>& v_p0,
                                      const micro::CoarseGrid& g);

/// Relative H1 errors over the fluid part of micro Phi against the macro limit,
/// plain and with the first-order corrector eps * sum_j phi_j(x/eps) d_j Phi0(x).
/// Constants are matched on the fluid part first.
struct CorrectorErrors {
  double plain = 0.0;
  double corrected = 0.0;
};
CorrectorErrors corrector_enhanced_error(const mesh::PerforatedMesh& pm, const fem::Vector& micro_phi,
                                         const mesh::TriMesh& macro_mesh, const fem::Vector& macro_phi,
                                         const cell::ScalarCellSolutions& cell_sols);
/// Same comparison with the limit given analytically (value and gradient).
CorrectorErrors corrector_enhanced_error(const mesh::PerforatedMesh& pm, const fem::Vector& micro_phi,
                                         const std::function<double(const Vec2&)>& phi0,
                                         const std::function<Vec2(const Vec2&)>& grad_phi0,
                                         const cell::ScalarCellSolutions& cell_sols);

/// Throws InadmissibleScaling before any solve. Micro runs go in parallel over eps.
ConvergenceStudy run_convergence_study(const StudyConfig& cfg);

/// Columns: eps,h,e_c_plus,e_c_minus,e_phi,e_v,observed_order,e_phi_h1,e_phi_h1_corrected. 17 digits.
void write_study_csv(std::ostream& os, const ConvergenceStudy& s);

/// SNPP_THREADS if set and positive, else hardware concurrency (at least 1).
int default_thread_count();

}  // namespace snpp::verify
