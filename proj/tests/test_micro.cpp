#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "snpp/micro.hpp"
#include "snpp/verify.hpp"

using namespace snpp;
using namespace snpp::micro;

namespace {

std::shared_ptr<const mesh::PerforatedMesh> perforated(double eps, bool hole, double h) {
  mesh::PerforatedDomain dom;
  dom.eps = eps;
  if (hole) dom.cell.inclusion = mesh::Disk{};
  return std::make_shared<const mesh::PerforatedMesh>(mesh::generate_perforated_mesh(dom, h));
}

macro::ScalingRegime neumann(double a, double b, double g, double sigma = 0.0) {
  macro::ScalingRegime r;
  r.alpha = a;
  r.beta = b;
  r.gamma = g;
  r.sigma = sigma;
  return r;
}

double max_abs(const std::vector<Vec2>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max({m, std::abs(x.x), std::abs(x.y)});
  return m;
}

MicroProblem charged_problem(std::shared_ptr<const mesh::PerforatedMesh> pm, const macro::ScalingRegime& reg) {
  MicroProblem pb;
  pb.regime = reg;
  const auto [cp, cm] = verify::BlobData{}.sample(pm->mesh, verify::micro_charge_target(*pm, reg));
  pb.pmesh = std::move(pm);
  pb.c_plus0 = cp;
  pb.c_minus0 = cm;
  return pb;
}

}  // namespace

TEST(Micro, ZeroChargeGivesZeroPotentialAndFlow) {
  auto pm = perforated(0.5, true, 0.0625);
  MicroProblem pb;
  pb.pmesh = pm;
  pb.regime = neumann(0, 0, 0);
  pb.c_plus0 = fem::Vector::Constant(pm->mesh.num_nodes(), 0.5);
  pb.c_minus0 = pb.c_plus0;
  pb.T = 0.01;
  pb.dt = 0.005;
  const auto run = run_micro(pb);
  EXPECT_LE(run.final_state.potential.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(max_abs(run.final_state.velocity.values), 1e-12);
  EXPECT_LE((run.final_state.c_plus.array() - 0.5).abs().maxCoeff(), 1e-12);
}

// eps = 1 without inclusions is the plain single-domain system; compose it from fem calls.
TEST(Micro, UnitScaleMatchesDirectComposition) {
  auto pm = perforated(1.0, false, 0.125);
  ASSERT_EQ(pm->hole_count(), 0);
  const auto& m = pm->mesh;
  const auto reg = neumann(0, 0, 0);
  MicroProblem pb = charged_problem(pm, reg);
  pb.exact_stokes = true;
  const double dt = 0.01;

  const fem::Vector w = fem::assemble_basis_integrals(m);
  const fem::SparseMatrix mass = fem::assemble_mass(m);
  const fem::SparseMatrix k = fem::assemble_stiffness(m);
  fem::StokesBoundary bc;
  bc.no_slip = {mesh::BoundaryTag::GammaInterior, mesh::BoundaryTag::OuterBoundary};
  auto potential = [&](const fem::Vector& cp, const fem::Vector& cm) {
    return fem::solve_constrained(fem::apply_zero_mean(fem::make_system(k, mass * (cp - cm)), w));
  };
  auto flow = [&](const fem::Vector& cp, const fem::Vector& cm, const fem::Vector& phi) {
    const auto g = fem::gradient_p0(m, phi);
    fem::VectorField f;
    f.kind = fem::FieldKind::P1Disc;
    for (int t = 0; t < m.num_triangles(); ++t) {
      for (int j = 0; j < 3; ++j) {
        const int i = m.triangles[t][j];
        f.values.push_back(g[t] * -(cp[i] - cm[i]));
      }
    }
    return fem::solve_stokes(m, f, bc, 1.0);
  };

  const fem::Vector phi0 = potential(pb.c_plus0, pb.c_minus0);
  const auto v0 = flow(pb.c_plus0, pb.c_minus0, phi0);
  fem::Vector cp = pb.c_plus0, cm = pb.c_minus0, phi = phi0;
  fem::StokesSolution v = v0;
  for (int it = 1; it <= 25; ++it) {
    if (it > 1) {
      phi = potential(cp, cm);
      v = flow(cp, cm, phi);
    }
    fem::SpeciesStep st;
    st.mesh = &m;
    st.velocity = &v.velocity;
    st.potential = &phi;
    st.drift_scale = 1.0;
    auto [np, nm] = fem::step_species(st, pb.c_plus0, pb.c_minus0, dt);
    const double change = std::max((np - cp).cwiseAbs().maxCoeff(), (nm - cm).cwiseAbs().maxCoeff());
    cp = np;
    cm = nm;
    if (change <= 1e-8) break;
  }

  MicroState s0;
  s0.c_plus = pb.c_plus0;
  s0.c_minus = pb.c_minus0;
  const MicroState s1 = step_micro(s0, pb, dt);
  EXPECT_LE((s1.c_plus - cp).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s1.c_minus - cm).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s1.potential - potential(cp, cm)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Micro, MassConservedEachStep) {
  auto pm = perforated(0.5, true, 0.0625);
  MicroProblem pb = charged_problem(pm, neumann(0, 0, 0));
  pb.T = 0.02;
  pb.dt = 0.002;
  const auto run = run_micro(pb);
  ASSERT_EQ(run.diagnostics.rows.size(), 11u);
  const double m0 = run.diagnostics.rows.front().mass;
  for (const auto& r : run.diagnostics.rows) EXPECT_LE(std::abs(r.mass - m0), 1e-9 * m0);
}

TEST(Micro, SurfaceChargeLoadsPotential) {
  auto pm = perforated(0.5, true, 0.0625);
  const auto reg = neumann(0, 0, 0, 1.0);
  MicroProblem pb = charged_problem(pm, reg);
  MicroSolver s(pm, reg);
  const fem::Vector phi = s.potential(pb.c_plus0, pb.c_minus0);
  EXPECT_GT(phi.cwiseAbs().maxCoeff(), 1e-6);
  // unbalanced data must be rejected
  try {
    s.potential(fem::Vector::Constant(pm->mesh.num_nodes(), 0.5), fem::Vector::Constant(pm->mesh.num_nodes(), 0.5));
    ADD_FAILURE() << "expected IncompatibleSource";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompatibleSource);
  }
}

TEST(Micro, NoSlipOnAllBoundaries) {
  auto pm = perforated(0.5, true, 0.0625);
  const auto reg = neumann(0, 0, 0);
  MicroProblem pb = charged_problem(pm, reg);
  MicroSolver s(pm, reg);
  const fem::Vector phi = s.potential(pb.c_plus0, pb.c_minus0);
  const auto fl = s.flow(pb.c_plus0, pb.c_minus0, phi);
  ASSERT_EQ(fl.velocity.kind, fem::FieldKind::P2);
  EXPECT_GT(max_abs(fl.velocity.values), 1e-8);
  std::set<int> bnodes;
  for (const auto& e : pm->mesh.boundary_edges) {
    bnodes.insert(e.a);
    bnodes.insert(e.b);
  }
  for (int i : bnodes) {
    EXPECT_EQ(fl.velocity.values[i].x, 0.0);
    EXPECT_EQ(fl.velocity.values[i].y, 0.0);
  }
  EXPECT_LE(fl.divergence_residual, 1e-8);
}

TEST(Micro, InvalidInitialDataRejected) {
  auto pm = perforated(0.5, true, 0.0625);
  MicroProblem pb;
  pb.pmesh = pm;
  pb.c_plus0 = fem::Vector::Constant(pm->mesh.num_nodes(), 1.5);
  pb.c_minus0 = fem::Vector::Constant(pm->mesh.num_nodes(), 0.5);
  try {
    run_micro(pb);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Averaging, ConstantAndIndicator) {
  auto pm = perforated(0.25, true, 0.03125);
  const CoarseGrid g{pm->outer, 2, 2};
  const fem::Vector one = fem::Vector::Ones(pm->mesh.num_nodes());
  for (double a : average_micro_field(*pm, one, g, AverageMode::FluidMean)) EXPECT_NEAR(a, 1.0, 1e-12);
  const double porosity = mesh::UnitCellGeometry{mesh::Disk{}, 0.05}.fluid_area();
  for (double a : average_micro_field(*pm, one, g, AverageMode::CellIntegral)) EXPECT_NEAR(a, porosity, 5e-3);
}

TEST(Averaging, LinearFieldGivesCellCentres) {
  auto pm = perforated(0.25, true, 0.03125);
  const CoarseGrid g{pm->outer, 4, 4};
  const fem::Vector x = fem::interpolate_fn(pm->mesh, [](const Vec2& p) { return p.x; });
  const auto av = average_micro_field(*pm, x, g, AverageMode::FluidMean);
  for (int iy = 0; iy < 4; ++iy) {
    for (int ix = 0; ix < 4; ++ix) EXPECT_NEAR(av[ix + 4 * iy], 0.125 + 0.25 * ix, 0.25);
  }
}

TEST(Averaging, VelocityCellIntegral) {
  auto pm = perforated(0.5, false, 0.125);
  fem::VectorField v = fem::VectorField::zeros_p1(pm->mesh);
  for (auto& x : v.values) x = {1.0, -2.0};
  for (const auto& a : average_micro_field(*pm, v, CoarseGrid{pm->outer, 2, 2}, AverageMode::CellIntegral)) {
    EXPECT_NEAR(a.x, 1.0, 1e-12);
    EXPECT_NEAR(a.y, -2.0, 1e-12);
  }
}

TEST(Averaging, MisalignedGridRejected) {
  auto pm = perforated(0.25, true, 0.0625);
  const fem::Vector one = fem::Vector::Ones(pm->mesh.num_nodes());
  try {
    average_micro_field(*pm, one, CoarseGrid{pm->outer, 3, 3}, AverageMode::FluidMean);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMisaligned);
  }
}
