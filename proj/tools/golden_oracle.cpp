// Fine-grid reference values of d = D11, k = K11, m for the r = 0.25 disk.
// Three cell resolutions, observed order from the last three, Richardson
// extrapolation of the finest pair. Output goes to tests/data.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "snpp/cell.hpp"

using namespace snpp;

namespace {

double extrapolate(double coarse, double mid, double fine, double ratio, double* order) {
  double p = 2.0;
  const double d1 = coarse - mid, d2 = mid - fine;
  if (d1 != 0.0 && d2 != 0.0 && d1 / d2 > 0.0) p = std::log(d1 / d2) / std::log(ratio);
  p = std::clamp(p, 1.0, 4.0);
  *order = p;
  const double r = std::pow(ratio, p);
  return (r * fine - mid) / (r - 1.0);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "golden_cell_r025.txt";
  const std::vector<double> hs{0.04, 0.02, 0.01};
  std::vector<cell::EffectiveCoefficients> c;
  for (double h : hs) {
    mesh::UnitCellGeometry g;
    g.inclusion = mesh::Disk{};
    g.target_h = h;
    c.push_back(cell::compute_effective_coefficients(g, 0.0));
    std::cerr << std::setprecision(10) << "h=" << h << " d=" << c.back().D(0, 0) << " k=" << c.back().K(0, 0)
              << " m=" << c.back().dirichlet_mean << '\n';
  }
  double pd = 0, pk = 0, pm = 0;
  const double d = extrapolate(c[0].D(0, 0), c[1].D(0, 0), c[2].D(0, 0), 2.0, &pd);
  const double k = extrapolate(c[0].K(0, 0), c[1].K(0, 0), c[2].K(0, 0), 2.0, &pk);
  const double m = extrapolate(c[0].dirichlet_mean, c[1].dirichlet_mean, c[2].dirichlet_mean, 2.0, &pm);

  std::ofstream f(path);
  f << std::setprecision(12);
  f << "# disk r=0.25 centred, cell meshes h=0.04,0.02,0.01, Richardson on the finest pair\n";
  for (std::size_t i = 0; i < hs.size(); ++i) {
    f << "# h=" << hs[i] << " d=" << c[i].D(0, 0) << " k=" << c[i].K(0, 0) << " m=" << c[i].dirichlet_mean << '\n';
  }
  f << "# observed orders d=" << pd << " k=" << pk << " m=" << pm << '\n';
  f << "d=" << d << "\nk=" << k << "\nm=" << m << '\n';
  std::cout << "wrote " << path << '\n';
  return f ? 0 : 1;
}
