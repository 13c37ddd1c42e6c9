#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "snpp/diagnostics.hpp"
#include "snpp/fem.hpp"
#include "snpp/macro.hpp"
#include "snpp/mesh.hpp"

namespace snpp::micro {

struct MicroProblem {
  std::shared_ptr<const mesh::PerforatedMesh> pmesh;
  macro::ScalingRegime regime;
  fem::Vector c_plus0, c_minus0;  // on pmesh->mesh nodes
  double T = 0.1;
  double dt = 0.0;  // 0 = h^2 / 4
  double lambda = 1.0;
  double fp_tol = 1e-8;
  int fp_max = 25;
  /// Re-solve Stokes on every sweep; otherwise the previous flow is reused while
  /// the forcing changes by at most 1e-8 (relative, max norm).
  bool exact_stokes = false;
  bool upwind = false;
};

struct MicroState {
  double t = 0.0;
  fem::Vector c_plus, c_minus;
  fem::Vector potential;
  fem::Vector pressure;
  fem::VectorField velocity;  // P2
  double div_residual = 0.0;
};

/// Pore-scale operators for one perforated mesh and regime (factored once).
class MicroSolver {
 public:
  MicroSolver(std::shared_ptr<const mesh::PerforatedMesh> pmesh, const macro::ScalingRegime& regime);
  ~MicroSolver();
  MicroSolver(MicroSolver&&) noexcept;

  const mesh::PerforatedMesh& pmesh() const;
  double eps() const;

  /// eps^alpha Poisson with eps*sigma flux (Neumann, zero mean) or phi_d (Dirichlet) on Gamma;
  /// homogeneous Neumann on the outer boundary. IncompatibleSource if the Neumann data do
  /// not integrate to zero within 1e-10.
  fem::Vector potential(const fem::Vector& c_plus, const fem::Vector& c_minus) const;
  /// eps^2 Stokes with forcing -eps^beta (c+ - c-) grad Phi, no-slip on Gamma and the outer boundary.
  fem::StokesSolution flow(const fem::Vector& c_plus, const fem::Vector& c_minus, const fem::Vector& phi) const;
  /// Forcing used by `flow`, as a P1Disc field.
  fem::VectorField forcing(const fem::Vector& c_plus, const fem::Vector& c_minus, const fem::Vector& phi) const;
  fem::StokesSolution flow_from_forcing(const fem::VectorField& f) const;
  std::pair<fem::Vector, fem::Vector> step_np(const fem::Vector& c_plus, const fem::Vector& c_minus,
                                              const fem::Vector& phi, const fem::VectorField& v, double dt,
                                              bool upwind = false) const;
  DiagnosticRow diagnose(const MicroState& s) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One coupled step (potential -> Stokes -> species, iterated to a fixed point).
/// Builds the operators on every call; run_micro reuses them.
MicroState step_micro(const MicroState& state, const MicroProblem& problem, double dt);

struct MicroRun {
  MicroState final_state;
  RunDiagnostics diagnostics;
  int steps = 0;
};

using MicroObserver = std::function<void(const MicroState&, int step)>;

MicroRun run_micro(const MicroProblem& problem, const MicroObserver& observer = {});

/// Coarse grid whose cells are unions of eps-cells of the perforated domain.
struct CoarseGrid {
  mesh::Rectangle rect;
  int nx = 1;
  int ny = 1;
};

/// FluidMean: integral over the fluid part / fluid area (concentrations, Neumann potential).
/// CellIntegral: integral over the fluid part / full cell area (velocity, Dirichlet potential),
/// i.e. the integral over Y_l of the cell profile.
enum class AverageMode { FluidMean, CellIntegral };

/// Row-major (ix + nx * iy). GridMisaligned unless the grid matches the eps-cells.
std::vector<double> average_micro_field(const mesh::PerforatedMesh& pm, const fem::Vector& field,
                                        const CoarseGrid& grid, AverageMode mode);
std::vector<Vec2> average_micro_field(const mesh::PerforatedMesh& pm, const fem::VectorField& field,
                                      const CoarseGrid& grid, AverageMode mode);

}  // namespace snpp::micro
