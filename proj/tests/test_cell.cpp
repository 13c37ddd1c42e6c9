#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "golden.hpp"
#include "snpp/cell.hpp"

using namespace snpp;
using namespace snpp::cell;

namespace {

std::shared_ptr<const mesh::TriMesh> cell_mesh(std::optional<double> r, double h) {
  mesh::UnitCellGeometry g;
  if (r) g.inclusion = mesh::Disk{{0.5, 0.5}, *r};
  g.target_h = h;
  return std::make_shared<const mesh::TriMesh>(mesh::generate_unit_cell_mesh(g));
}

double energy1(const ScalarCellSolutions& s) {
  const auto g = fem::gradient_p0(*s.mesh, s.phi[0]);
  double e = 0;
  for (int t = 0; t < s.mesh->num_triangles(); ++t) e += s.mesh->triangle_area(t) * g[t].dot(g[t]);
  return e;
}

template <class F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(ScalarCell, NoInclusionGivesZeroCorrectors) {
  const auto s = solve_scalar_cell_problems(cell_mesh(std::nullopt, 0.1));
  EXPECT_LE(s.phi[0].lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(s.phi[1].lpNorm<Eigen::Infinity>(), 1e-12);
  const Tensor2 d = compute_diffusion_tensor(s);
  EXPECT_NEAR(d(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(d(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(d(0, 1), 0.0, 1e-12);
}

TEST(ScalarCell, MirrorAntisymmetry) {
  const auto s = solve_scalar_cell_problems(cell_mesh(0.25, 0.05));
  const auto& m = *s.mesh;
  mesh::PointLocator loc(m);
  double worst = 0;
  for (int i = 0; i < m.num_nodes(); ++i) {
    const Vec2 q{1.0 - m.nodes[i].x, m.nodes[i].y};
    const auto hit = loc.locate(q, 1e-9);
    ASSERT_TRUE(hit.has_value());
    const auto& tri = m.triangles[hit->first];
    double v = 0;
    for (int k = 0; k < 3; ++k) v += hit->second[k] * s.phi[0][tri[k]];
    worst = std::max(worst, std::abs(v + s.phi[0][i]));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(ScalarCell, CompatibleNeumannData) {
  const auto m = cell_mesh(0.25, 0.05);
  const std::vector<Vec2> e1(m->num_triangles(), Vec2{1.0, 0.0});
  EXPECT_LT(std::abs(fem::assemble_gradient_load(*m, e1).sum()), 1e-12);
}

TEST(ScalarCell, EnergyConvergesAtSecondOrder) {
  std::vector<double> e;
  for (double h : {0.08, 0.04, 0.02}) e.push_back(energy1(solve_scalar_cell_problems(cell_mesh(0.25, h))));
  const double p = std::log2((e[0] - e[1]) / (e[1] - e[2]));
  EXPECT_GT(p, 1.5);
  EXPECT_LT(p, 2.8);
}

TEST(Diffusion, DiskIsIsotropicAndBounded) {
  const auto s = solve_scalar_cell_problems(cell_mesh(0.25, 0.025));
  const Tensor2 d = compute_diffusion_tensor(s);
  EXPECT_LT(std::abs(d(0, 0) - d(1, 1)), 1e-6);
  EXPECT_LT(std::abs(d(0, 1)), 1e-8);
  EXPECT_GT(d(0, 0), 0.0);
  EXPECT_LT(d(0, 0), 1.0 - kPi / 16.0);
  const Tensor2 de = diffusion_tensor_energy(s);
  EXPECT_LE(std::abs(de(0, 0) - d(0, 0)), 1e-6 * d(0, 0));
}

TEST(Diffusion, TendsToIdentityForSmallDisks) {
  const auto d1 = compute_diffusion_tensor(solve_scalar_cell_problems(cell_mesh(0.1, 0.02)));
  const auto d2 = compute_diffusion_tensor(solve_scalar_cell_problems(cell_mesh(0.05, 0.01)));
  EXPECT_LT(std::abs(d2(0, 0) - 1.0), std::abs(d1(0, 0) - 1.0));
}

TEST(Permeability, NoInclusionIsRejected) {
  expect_error(ErrorCode::NoSolidPhase, [] { solve_stokes_cell_problems(cell_mesh(std::nullopt, 0.2)); });
  expect_error(ErrorCode::NoSolidPhase, [] { solve_dirichlet_cell_problem(cell_mesh(std::nullopt, 0.2)); });
}

TEST(Permeability, DiskIsIsotropicAndPositive) {
  const auto s = solve_stokes_cell_problems(cell_mesh(0.25, 0.05));
  const Tensor2 k = compute_permeability_tensor(s);
  EXPECT_GT(k(0, 0), 0.0);
  EXPECT_LT(std::abs(k(0, 1)), 1e-8);
  EXPECT_LT(std::abs(k(1, 0)), 1e-8);
  EXPECT_LT(std::abs(k(0, 0) - k(1, 1)), 1e-8 * k.trace());
  const Tensor2 ke = permeability_tensor_energy(s);
  EXPECT_LE(std::abs(ke(0, 0) - k(0, 0)), 1e-6 * k(0, 0));
  EXPECT_LE(s.divergence_residual, 1e-8);
}

TEST(Permeability, FluxMatchesFineGridOracle) {
  // integral of the cell velocity at a coarse mesh against the committed oracle value
  const auto g = read_golden(golden_path());
  const auto s = solve_stokes_cell_problems(cell_mesh(0.25, 0.05));
  const Vec2 q = fem::integrate_velocity(*s.mesh, s.w[0]);
  EXPECT_GT(q.x, 0.0);
  EXPECT_NEAR(q.x, g.at("k"), 0.01 * g.at("k"));
}

TEST(Permeability, DecreasesWithRadius) {
  double prev = 1e9;
  for (double r : {0.2, 0.3, 0.4}) {
    const double k = compute_permeability_tensor(solve_stokes_cell_problems(cell_mesh(r, 0.04)))(0, 0);
    EXPECT_LT(k, prev);
    prev = k;
  }
}

TEST(DirichletCell, MaximumPrincipleAndMonotoneMean) {
  double prev = 1e9;
  for (double r : {0.2, 0.3, 0.4}) {
    const auto s = solve_dirichlet_cell_problem(cell_mesh(r, 0.04));
    EXPECT_GE(s.phi.minCoeff(), -1e-10);
    const double m = compute_dirichlet_mean(s);
    EXPECT_LT(m, prev);
    prev = m;
  }
}

TEST(Golden, CoefficientsAtWorkingResolution) {
  const auto g = read_golden(golden_path());
  mesh::UnitCellGeometry geom;
  geom.inclusion = mesh::Disk{};
  geom.target_h = 0.025;
  const auto c = compute_effective_coefficients(geom, 0.0);
  EXPECT_NEAR(c.D(0, 0), g.at("d"), 5e-3 * g.at("d"));
  EXPECT_NEAR(c.K(0, 0), g.at("k"), 5e-3 * g.at("k"));
  EXPECT_NEAR(c.dirichlet_mean, g.at("m"), 5e-3 * g.at("m"));
}

TEST(SigmaBar, PerimeterFormula) {
  mesh::UnitCellGeometry g;
  g.inclusion = mesh::Disk{};
  EXPECT_EQ(compute_sigma_bar(g, 0.0), 0.0);
  EXPECT_NEAR(compute_sigma_bar(g, 1.0), 2 * kPi * 0.25, 1e-12);
  EXPECT_NEAR(compute_sigma_bar(g, -2.0), -kPi, 1e-12);
  EXPECT_NEAR(compute_sigma_bar(g, 1.0), 1.5708, 1e-4);
}

TEST(Corrector, Lookups) {
  const auto s = solve_scalar_cell_problems(cell_mesh(0.25, 0.1));
  const Vec2 y = s.mesh->nodes[5];
  EXPECT_EQ(reconstruct_corrector(Vec2{0.0, 0.0}, s, y), 0.0);
  EXPECT_NEAR(reconstruct_corrector(Vec2{1.0, 0.0}, s, y), s.phi[0][5], 1e-12);
  EXPECT_NEAR(reconstruct_corrector(Vec2{1.0, 0.0}, s, y + Vec2{2.0, -1.0}), s.phi[0][5], 1e-10);
  const auto empty = solve_scalar_cell_problems(cell_mesh(std::nullopt, 0.2));
  EXPECT_NEAR(reconstruct_corrector(Vec2{1.0, 1.0}, empty, {0.3, 0.3}), 0.0, 1e-12);
  expect_error(ErrorCode::PointOutsideFluidPart, [&] { reconstruct_corrector(Vec2{1.0, 0.0}, s, {0.5, 0.5}); });
}

TEST(Coefficients, FileRoundTrip) {
  mesh::UnitCellGeometry geom;
  geom.inclusion = mesh::Disk{};
  geom.target_h = 0.05;
  const auto c = compute_effective_coefficients(geom, 1.0);
  std::stringstream ss;
  write_coefficients(ss, c, geom);
  int keys = 0;
  std::string line;
  std::stringstream copy(ss.str());
  while (std::getline(copy, line)) {
    if (!line.empty() && line[0] != '#') ++keys;
  }
  EXPECT_EQ(keys, 9);
  const auto r = read_coefficients(ss);
  EXPECT_EQ(r.porosity, c.porosity);
  // the file stores the upper triangle; the lower entry comes back mirrored
  for (const auto& [got, want] : {std::pair{r.D, c.D}, std::pair{r.K, c.K}}) {
    EXPECT_EQ(got(0, 0), want(0, 0));
    EXPECT_EQ(got(0, 1), want(0, 1));
    EXPECT_EQ(got(1, 1), want(1, 1));
    EXPECT_EQ(got(1, 0), want(0, 1));
  }
  EXPECT_EQ(r.sigma_bar, c.sigma_bar);
  EXPECT_EQ(r.dirichlet_mean, c.dirichlet_mean);
  std::stringstream bad("porosity=abc\n");
  expect_error(ErrorCode::ParseError, [&] { read_coefficients(bad); });
}

TEST(Coefficients, ScalarCorrectorsShared) {
  // the same scalar cell solve feeds D for both the potential and the concentrations
  mesh::UnitCellGeometry geom;
  geom.inclusion = mesh::Disk{};
  geom.target_h = 0.05;
  const auto c = compute_effective_coefficients(geom, 0.0);
  const auto d = compute_diffusion_tensor(solve_scalar_cell_problems(cell_mesh(0.25, 0.05)));
  EXPECT_EQ(c.D.a, d.a);
}
