#pragma once

#include <functional>
#include <memory>
#include <string>

#include "snpp/cell.hpp"
#include "snpp/diagnostics.hpp"
#include "snpp/fem.hpp"

namespace snpp::macro {

enum class BcType { Neumann, Dirichlet };

/// Exponents of the scaled pore-scale problem plus the electrostatic boundary
/// data: sigma (Neumann surface charge) or phi_d (Dirichlet surface potential).
struct ScalingRegime {
  BcType bc = BcType::Neumann;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double sigma = 0.0;
  double phi_d = 0.0;

  bool admissible() const;
  std::string describe() const;
};

enum class PotentialModel { EllipticPoisson, AlgebraicLocal };
enum class DarcyForcing { WithElectrostatic, Plain };
enum class NpDrift { WithDrift, None };

struct MacroModelClass {
  PotentialModel potential = PotentialModel::EllipticPoisson;
  DarcyForcing darcy = DarcyForcing::Plain;
  NpDrift drift = NpDrift::None;

  bool decoupled() const { return darcy == DarcyForcing::Plain && drift == NpDrift::None; }
  bool operator==(const MacroModelClass&) const = default;
};

const char* to_string(PotentialModel m);
const char* to_string(DarcyForcing m);
const char* to_string(NpDrift m);

/// Throws InadmissibleScaling outside the admissible exponent range.
MacroModelClass classify_regime(const ScalingRegime& regime);

struct MacroState {
  double t = 0.0;
  fem::Vector c_plus, c_minus;
  fem::Vector potential;  // tilde potential (Neumann) or averaged potential (Dirichlet)
  fem::Vector pressure;
  fem::VectorField velocity;  // P0, one vector per triangle
};

struct MacroProblem {
  std::shared_ptr<const mesh::TriMesh> mesh;
  cell::EffectiveCoefficients coeffs;
  ScalingRegime regime;
  fem::Vector c_plus0, c_minus0;
  double T = 0.5;
  double dt = 0.0;  // 0 = h^2 / 4
  double lambda = 1.0;
  double fp_tol = 1e-8;
  int fp_max = 25;
  bool upwind = false;
};

/// Macro operators, assembled and factored once per mesh/coefficients.
class MacroSolver {
 public:
  MacroSolver(std::shared_ptr<const mesh::TriMesh> mesh, cell::EffectiveCoefficients coeffs, ScalingRegime regime);

  const MacroModelClass& model() const { return model_; }
  const mesh::TriMesh& mesh() const { return *mesh_; }

  /// Neumann branch: zero-mean solution of -div(D grad Phi) = |Y_l|(c+ - c-) + sigma_bar.
  /// Throws IncompatibleSource when the integrated source exceeds 1e-8.
  fem::Vector solve_poisson(const fem::Vector& c_plus, const fem::Vector& c_minus) const;
  /// Dispatches on the potential model.
  fem::Vector potential(const fem::Vector& c_plus, const fem::Vector& c_minus) const;
  /// p zero-mean, v = -K(grad p + f) elementwise with f the electrostatic forcing (or 0).
  std::pair<fem::Vector, fem::VectorField> darcy(const fem::Vector& c_plus, const fem::Vector& c_minus,
                                                 const fem::Vector& potential) const;
  /// Generic Darcy solve with an elementwise forcing f.
  std::pair<fem::Vector, fem::VectorField> darcy_with_forcing(const std::vector<Vec2>& f) const;
  /// One implicit step of both species with the given potential and velocity.
  std::pair<fem::Vector, fem::Vector> step_np(const fem::Vector& c_plus, const fem::Vector& c_minus,
                                              const fem::Vector& potential, const fem::VectorField& velocity,
                                              double dt, bool upwind = false) const;

  /// Diagnostics of a state (fp_iters left at 0).
  DiagnosticRow diagnose(const MacroState& s) const;

 private:
  std::shared_ptr<const mesh::TriMesh> mesh_;
  cell::EffectiveCoefficients coeffs_;
  ScalingRegime regime_;
  MacroModelClass model_;
  fem::Vector weights_;
  fem::SparseMatrix mass_;
  fem::SparseMatrix stiff_d_;
  std::shared_ptr<const fem::FactoredSystem> poisson_;
  std::shared_ptr<const fem::FactoredSystem> darcy_;
};

fem::Vector solve_macro_poisson(const mesh::TriMesh& mesh, const cell::EffectiveCoefficients& coeffs,
                                const fem::Vector& c_plus, const fem::Vector& c_minus);
/// m (c+ - c-), plus |Y_l| phi_d when alpha = 2.
fem::Vector eval_macro_potential_dirichlet(const fem::Vector& c_plus, const fem::Vector& c_minus,
                                           const cell::EffectiveCoefficients& coeffs, const ScalingRegime& regime);

struct MacroRun {
  MacroState final_state;
  RunDiagnostics diagnostics;
  int steps = 0;
};

/// Called after every completed step (and once for the initial state, step 0).
using MacroObserver = std::function<void(const MacroState&, int step)>;

/// Per step: potential -> Darcy -> species, iterated to a fixed point (change <= fp_tol,
/// at most fp_max sweeps; FixedPointDivergence otherwise). Decoupled regimes take one sweep.
MacroRun run_macro(const MacroProblem& problem, const MacroObserver& observer = {});

}  // namespace snpp::macro
