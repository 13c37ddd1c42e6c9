#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>

#include "snpp/fem.hpp"
#include "snpp/mesh.hpp"

namespace snpp::cell {

/// Periodic zero-mean correctors phi_1, phi_2 (one per unit direction).
/// The same pair serves the potential and the concentration limits.
struct ScalarCellSolutions {
  std::shared_ptr<const mesh::TriMesh> mesh;
  std::array<fem::Vector, 2> phi;
};

struct StokesCellSolutions {
  std::shared_ptr<const mesh::TriMesh> mesh;
  std::array<fem::VectorField, 2> w;  // P2 velocities
  std::array<fem::Vector, 2> pi;      // P1 pressures, zero mean
  double divergence_residual = 0.0;
};

struct DirichletCellSolution {
  std::shared_ptr<const mesh::TriMesh> mesh;
  fem::Vector phi;
};

struct EffectiveCoefficients {
  double porosity = 1.0;
  Tensor2 D = Tensor2::identity();
  Tensor2 K = Tensor2::scalar(0.0);
  double sigma_bar = 0.0;
  double dirichlet_mean = 0.0;
};

ScalarCellSolutions solve_scalar_cell_problems(std::shared_ptr<const mesh::TriMesh> mesh);

/// Averaging formula, cross-checked against the energy form.
/// Throws FormulaMismatch if the two disagree by more than 1e-6 relative.
Tensor2 compute_diffusion_tensor(const ScalarCellSolutions& sols);
/// Energy form (e_i + grad phi_i) . (e_j + grad phi_j) integrated over Y_l.
Tensor2 diffusion_tensor_energy(const ScalarCellSolutions& sols);

/// Throws NoSolidPhase without an inclusion.
StokesCellSolutions solve_stokes_cell_problems(std::shared_ptr<const mesh::TriMesh> mesh,
                                               fem::StokesMethod method = fem::StokesMethod::Auto);
Tensor2 compute_permeability_tensor(const StokesCellSolutions& sols);
Tensor2 permeability_tensor_energy(const StokesCellSolutions& sols);

/// -Lap phi = 1, phi = 0 on Gamma, periodic. Throws NoSolidPhase without Gamma.
DirichletCellSolution solve_dirichlet_cell_problem(std::shared_ptr<const mesh::TriMesh> mesh);
double compute_dirichlet_mean(const DirichletCellSolution& sol);

double compute_sigma_bar(const mesh::UnitCellGeometry& geom, double sigma);

/// sum_j phi_j(y) g_j(x). `y` is wrapped into the unit cell first.
/// Throws PointOutsideFluidPart if y falls in the inclusion.
double reconstruct_corrector(const std::function<Vec2(const Vec2&)>& macro_grad,
                             const ScalarCellSolutions& sols, const Vec2& x, const Vec2& y);
double reconstruct_corrector(const Vec2& macro_grad, const ScalarCellSolutions& sols, const Vec2& y);

/// Everything at once. Porosity is the mesh area. Without an inclusion K is
/// left at zero and the Dirichlet mean at zero (both problems are ill-posed).
EffectiveCoefficients compute_effective_coefficients(const mesh::UnitCellGeometry& geom, double sigma);

/// Flat key=value file; geometry is echoed as '#' comment lines.
void write_coefficients(std::ostream& os, const EffectiveCoefficients& c, const mesh::UnitCellGeometry& geom);
EffectiveCoefficients read_coefficients(std::istream& is);

}  // namespace snpp::cell
