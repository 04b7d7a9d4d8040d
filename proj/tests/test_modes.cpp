#include <catch2/catch_amalgamated.hpp>

#include "oracle_quadrature.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <complex>

using namespace guidecloak;

TEST_CASE("rectangle eigenpairs", "[modes]") {
  const CrossSection sq(1.0, 1.0);
  REQUIRE(std::abs(sq.lambda(1, 1) - 2.0 * pi * pi) < 1e-12);
  REQUIRE(std::abs(sq.lambda(2, 3) - 13.0 * pi * pi) < 1e-12);

  const CrossSection half(1.0, 0.5);
  REQUIRE(std::abs(half.lambda(1, 1) - 5.0 * pi * pi) < 1e-12);

  REQUIRE_THROWS_AS(sq.lambda(0, 1), ConfigError);
  REQUIRE_THROWS_AS(sq.phi(1, -2, {0.3, 0.3}), ConfigError);
  REQUIRE_THROWS_AS(CrossSection(0.0, 1.0), ConfigError);
  REQUIRE_THROWS_AS(sq.phi(1, 1, {1.5, 0.3}), ConfigError);
}

TEST_CASE("eigenfunctions are orthonormal", "[modes]") {
  const CrossSection cs(1.0, 0.7);
  const auto norm23 = integrate_2d(
      [&](double y1, double y2) {
        const double v = cs.phi(2, 3, {y1, y2});
        return v * v;
      },
      cs.a(), cs.b(), 60);
  REQUIRE(std::abs(norm23 - 1.0) < 1e-12);

  const auto cross = integrate_2d(
      [&](double y1, double y2) {
        return cs.phi(1, 1, {y1, y2}) * cs.phi(2, 1, {y1, y2});
      },
      cs.a(), cs.b(), 60);
  REQUIRE(std::abs(cross) < 1e-12);
}

TEST_CASE("eigenfunction gradient matches finite differences", "[modes]") {
  const CrossSection cs(1.0, 0.7);
  const Vec2 y{0.41, 0.23};
  const double h = 1e-6;
  const Vec2 g = cs.phi_grad(2, 3, y);
  const double d1 =
      (cs.phi(2, 3, {y.y1 + h, y.y2}) - cs.phi(2, 3, {y.y1 - h, y.y2})) / (2.0 * h);
  const double d2 =
      (cs.phi(2, 3, {y.y1, y.y2 + h}) - cs.phi(2, 3, {y.y1, y.y2 - h})) / (2.0 * h);
  REQUIRE(std::abs(g.y1 - d1) < 1e-6);
  REQUIRE(std::abs(g.y2 - d2) < 1e-6);
}

TEST_CASE("monomodal basis at k2=30", "[modes]") {
  const auto& basis = th::mono_basis();
  REQUIRE(basis.n_propagating() == 1);
  REQUIRE(basis.size() >= 10);
  REQUIRE(basis.eigenpair(0).p == 1);
  REQUIRE(basis.eigenpair(0).q == 1);

  REQUIRE(std::abs(basis.beta_pro(0) - 3.2032469773374146) < 1e-12);
  REQUIRE(std::abs(basis.beta_pro(0) - 3.20325) < 1e-5);

  for (int j = 1; j < basis.size(); ++j) {
    REQUIRE(basis.lambda(j) >= basis.lambda(j - 1));
    const cdouble beta = basis.beta(j);
    REQUIRE(beta.real() == 0.0);
    REQUIRE(beta.imag() > 0.0);
  }
  REQUIRE_THROWS_AS(basis.require_propagating(1), ConfigError);
  REQUIRE_THROWS_AS(basis.beta_pro(-1), ConfigError);
}

TEST_CASE("two propagating modes at k2=100 on the half rectangle", "[modes]") {
  const auto& basis = th::duo_basis();
  REQUIRE(basis.n_propagating() == 2);
  REQUIRE(std::abs(basis.beta_pro(0) - 7.1170203030870445) < 1e-12);
  REQUIRE(std::abs(basis.beta_pro(1) - 4.5872829421439807) < 1e-12);
  REQUIRE(std::abs(basis.lambda(0) - 5.0 * pi * pi) < 1e-12);
  REQUIRE(std::abs(basis.lambda(1) - 8.0 * pi * pi) < 1e-12);
  REQUIRE(basis.lambda(2) > 100.0);
}

TEST_CASE("j_max truncates after sorting", "[modes]") {
  ModeBasisOptions opt;
  opt.j_max = 5;
  const ModeBasis basis(CrossSection(1.0, 1.0), 30.0, opt);
  REQUIRE(basis.size() == 5);
  for (int j = 0; j < 5; ++j)
    REQUIRE(basis.lambda(j) == th::mono_basis().lambda(j));
}

TEST_CASE("near-cutoff and below-cutoff wavenumbers are rejected", "[modes]") {
  const CrossSection sq(1.0, 1.0);
  REQUIRE_THROWS_AS(ModeBasis(sq, 2.0 * pi * pi), NearCutoffError);
  REQUIRE_THROWS_AS(ModeBasis(sq, 19.7392088), NearCutoffError);
  REQUIRE_THROWS_AS(ModeBasis(sq, 10.0), RegimeError);
  REQUIRE_THROWS_AS(ModeBasis(sq, -4.0), ConfigError);
}

TEST_CASE("guided wave values", "[modes]") {
  const auto& basis = th::mono_basis();
  const cdouble w0 = mode_value(basis, 0, +1, {0.3, 0.3, 0.0});
  REQUIRE(std::abs(w0 - cdouble(0.51717208409313586, 0.0)) < 1e-12);
  REQUIRE(std::abs(std::abs(w0) - 0.51717) < 1e-5);

  REQUIRE(std::abs(mode_value(basis, 0, +1, {0.0, 0.4, 1.0})) == 0.0);

  // Propagating waves keep their modulus along the axis; the +- pair's product
  // is z-independent.
  const cdouble wp = mode_value(basis, 0, +1, {0.3, 0.3, 1.7});
  const cdouble wm = mode_value(basis, 0, -1, {0.3, 0.3, 1.7});
  REQUIRE(std::abs(std::abs(wp) - std::abs(w0)) < 1e-13);
  REQUIRE(std::abs(std::conj(wm) - wp) < 1e-13);
  REQUIRE(std::abs(wp * wm - w0 * w0) < 1e-13);

  // Evanescent w+ decays with z.
  const int j_ev = basis.n_propagating();
  const double a1 = std::abs(mode_value(basis, j_ev, +1, {0.3, 0.3, 0.5}));
  const double a2 = std::abs(mode_value(basis, j_ev, +1, {0.3, 0.3, 1.0}));
  REQUIRE(a2 < a1);

  REQUIRE_THROWS_AS(mode_value(basis, 0, 0, {0.3, 0.3, 0.0}), ConfigError);
}

TEST_CASE("guided wave gradient matches finite differences", "[modes]") {
  const auto& basis = th::duo_basis();
  const Point3 x{0.37, 0.22, 0.5};
  const double h = 1e-6;
  for (int j : {0, 1, basis.n_propagating()}) {
    const auto g = mode_gradient(basis, j, +1, x);
    const cdouble d1 = (mode_value(basis, j, +1, {x.y1 + h, x.y2, x.z}) -
                        mode_value(basis, j, +1, {x.y1 - h, x.y2, x.z})) /
                       (2.0 * h);
    const cdouble d2 = (mode_value(basis, j, +1, {x.y1, x.y2 + h, x.z}) -
                        mode_value(basis, j, +1, {x.y1, x.y2 - h, x.z})) /
                       (2.0 * h);
    const cdouble d3 = (mode_value(basis, j, +1, {x.y1, x.y2, x.z + h}) -
                        mode_value(basis, j, +1, {x.y1, x.y2, x.z - h})) /
                       (2.0 * h);
    REQUIRE(std::abs(g[0] - d1) < 2e-6);
    REQUIRE(std::abs(g[1] - d2) < 2e-6);
    REQUIRE(std::abs(g[2] - d3) < 2e-6);
  }
}

TEST_CASE("axial wavenumber branch", "[modes]") {
  const cdouble pro = axial_wavenumber(30.0, 2.0 * pi * pi);
  REQUIRE(pro.imag() == 0.0);
  REQUIRE(pro.real() > 0.0);
  const cdouble ev = axial_wavenumber(30.0, 5.0 * pi * pi);
  REQUIRE(ev.real() == 0.0);
  REQUIRE(ev.imag() > 0.0);
}
