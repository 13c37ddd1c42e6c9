#pragma once

#include <optional>
#include <vector>

#include "snpp/macro.hpp"

// Regime classifier fixture table: 4 Neumann, 2 Dirichlet, 2 inadmissible.
struct RegimeFixture {
  snpp::macro::ScalingRegime regime;
  std::optional<snpp::macro::MacroModelClass> expected;  // nullopt = InadmissibleScaling
};

inline std::vector<RegimeFixture> regime_fixtures() {
  using namespace snpp::macro;
  auto reg = [](BcType bc, double a, double b, double g) {
    ScalingRegime r;
    r.bc = bc;
    r.alpha = a;
    r.beta = b;
    r.gamma = g;
    return r;
  };
  const auto N = BcType::Neumann;
  const auto D = BcType::Dirichlet;
  const auto E = PotentialModel::EllipticPoisson;
  const auto A = PotentialModel::AlgebraicLocal;
  const auto W = DarcyForcing::WithElectrostatic;
  const auto P = DarcyForcing::Plain;
  return {
      {reg(N, 0, 0, 0), MacroModelClass{E, W, NpDrift::WithDrift}},
      {reg(N, 0, 1, 1), MacroModelClass{E, P, NpDrift::None}},
      {reg(N, 0, 0, 1), MacroModelClass{E, W, NpDrift::None}},
      {reg(N, 0, 1, 0), MacroModelClass{E, P, NpDrift::WithDrift}},
      {reg(D, 2, 1, 1), MacroModelClass{A, P, NpDrift::None}},
      {reg(D, 1, 0, 0), MacroModelClass{A, P, NpDrift::None}},
      {reg(N, 0, -1, 0), std::nullopt},
      {reg(D, 2, 0, 1), std::nullopt},
  };
}
