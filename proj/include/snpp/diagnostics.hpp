#pragma once

#include <iosfwd>
#include <vector>

namespace snpp {

/// One row per stored time level.
struct DiagnosticRow {
  double t = 0.0;
  double mass = 0.0;    // integral of c+ + c- (weighted by porosity on the macro side)
  double charge = 0.0;  // same weighting, c+ - c-
  double min_c = 0.0;
  double max_c = 0.0;
  int fp_iters = 0;
  double energy = 0.0;
  double phi_mean = 0.0;  // integral of the potential (checked only when it must vanish)
  double p_mean = 0.0;
  double div_residual = 0.0;
  double additivity_defect = 0.0;  // max |c+ + c- - 1|
};

struct RunDiagnostics {
  std::vector<DiagnosticRow> rows;
  double lambda = 1.0;           // upper bound for the data
  bool additive_start = false;   // c+ + c- = 1 at t = 0
  bool zero_mean_potential = true;
};

/// CSV with '# key=value' metadata lines before the header; 17 significant digits.
void write_diagnostics_csv(std::ostream& os, const RunDiagnostics& d);
/// Throws MalformedDiagnostics on structural problems.
RunDiagnostics read_diagnostics_csv(std::istream& is);

}  // namespace snpp
