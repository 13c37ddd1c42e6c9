#include "snpp/diagnostics.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "snpp/common.hpp"

namespace snpp {

namespace {

constexpr const char* kHeader =
    "t,mass,charge,min_c,max_c,fp_iters,energy,phi_mean,p_mean,div_residual,additivity_defect";

[[noreturn]] void malformed(int line, const std::string& msg) {
  throw Error(ErrorCode::MalformedDiagnostics, "verify::read_diagnostics",
              "line " + std::to_string(line) + ": " + msg);
}

}  // namespace

void write_diagnostics_csv(std::ostream& os, const RunDiagnostics& d) {
  os << std::setprecision(17);
  os << "# lambda=" << d.lambda << '\n';
  os << "# additive_start=" << (d.additive_start ? 1 : 0) << '\n';
  os << "# zero_mean_potential=" << (d.zero_mean_potential ? 1 : 0) << '\n';
  os << kHeader << '\n';
  for (const auto& r : d.rows) {
    os << r.t << ',' << r.mass << ',' << r.charge << ',' << r.min_c << ',' << r.max_c << ',' << r.fp_iters << ','
       << r.energy << ',' << r.phi_mean << ',' << r.p_mean << ',' << r.div_residual << ',' << r.additivity_defect
       << '\n';
  }
}

RunDiagnostics read_diagnostics_csv(std::istream& is) {
  RunDiagnostics d;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string val = line.substr(eq + 1);
      try {
        if (key == "lambda") d.lambda = std::stod(val);
        else if (key == "additive_start") d.additive_start = std::stoi(val) != 0;
        else if (key == "zero_mean_potential") d.zero_mean_potential = std::stoi(val) != 0;
      } catch (const std::exception&) {
        malformed(lineno, "bad metadata value for " + key);
      }
      continue;
    }
    if (!header) {
      if (line != kHeader) malformed(lineno, "unexpected header");
      header = true;
      continue;
    }
    std::array<double, 11> v{};
    std::stringstream ss(line);
    std::string cell;
    int k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= 11) malformed(lineno, "too many columns");
      try {
        std::size_t used = 0;
        v[k] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        // stod rejects "nan"/"inf" spellings on some platforms; accept them explicitly.
        if (cell == "nan" || cell == "-nan") v[k] = std::nan("");
        else if (cell == "inf") v[k] = INFINITY;
        else if (cell == "-inf") v[k] = -INFINITY;
        else malformed(lineno, "bad number '" + cell + "'");
      }
      ++k;
    }
    if (k != 11) malformed(lineno, "expected 11 columns");
    DiagnosticRow r;
    r.t = v[0];
    r.mass = v[1];
    r.charge = v[2];
    r.min_c = v[3];
    r.max_c = v[4];
    r.fp_iters = static_cast<int>(v[5]);
    r.energy = v[6];
    r.phi_mean = v[7];
    r.p_mean = v[8];
    r.div_residual = v[9];
    r.additivity_defect = v[10];
    d.rows.push_back(r);
  }
  if (!header) malformed(lineno, "missing header");
  return d;
}

}  // namespace snpp
