#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "snpp/macro.hpp"
#include "snpp/mesh.hpp"
#include "snpp/verify.hpp"

namespace snpp::cli {

enum class Command { Cell, Macro, Micro, Converge, Check };

const char* to_string(Command c);
std::optional<Command> parse_command(const std::string& s);

struct OutputConfig {
  std::string directory = "snpp_out";
  bool csv = true;
  bool vtk = true;
  int snapshot_stride = 10;  // steps between VTK snapshots; 0 = final state only
};

struct RunConfig {
  Command command = Command::Cell;

  // geometry
  mesh::UnitCellGeometry cell;  // cell_h defaults to 0.025
  mesh::Rectangle domain;
  double eps = 0.25;  // micro only

  macro::ScalingRegime regime;

  // discretization
  double h = 0.0;  // micro mesh size; 0 = eps / 8
  int macro_n = 64;
  double dt = 0.0;  // 0 = h_max^2 / 4
  double T = 0.1;
  double lambda = 1.0;
  double fp_tol = 1e-8;
  int fp_max = 25;
  bool upwind = false;

  verify::BlobData initial;

  // converge
  std::vector<double> eps_list{0.5, 0.25, 0.125};
  double h_factor = 0.125;
  bool corrector = true;
  int threads = 0;

  std::string coefficients;  // macro: read D, K, ... from this file instead of solving cell problems
  std::string diagnostics;   // check: input CSV
  OutputConfig output;
};

/// Throws ParseError ("line L, column C: ...") on malformed text and ValidationError
/// naming the field (e.g. "regime.alpha") on bad content. `command` overrides or must
/// agree with a "command" key in the text.
RunConfig parse_config(const std::string& text, std::optional<Command> command = std::nullopt);

/// Fully-defaulted config as JSON (what the run actually used).
std::string echo_config(const RunConfig& cfg);

/// Convergence-study settings derived from a config.
verify::StudyConfig study_config(const RunConfig& cfg);

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kAcceptance = 3 };

struct RunOptions {
  bool fast = false;
};

/// Runs a parsed config, writing outputs (and a manifest) into cfg.output.directory.
int execute(const RunConfig& cfg, const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Whole command line: `snpp <cell|macro|micro|converge|check> --config FILE [...]`.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace snpp::cli
