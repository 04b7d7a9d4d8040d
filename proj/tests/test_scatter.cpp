#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

using namespace guidecloak;

namespace {

double fit_slope(const std::vector<double>& eps, const std::vector<double>& val) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = (int)eps.size();
  for (int i = 0; i < n; ++i) {
    const double x = std::log(eps[(std::size_t)i]), y = std::log(val[(std::size_t)i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("sphere capacity", "[scatter]") {
  REQUIRE(capacity_sphere(1.0) == 1.0);
  REQUIRE(capacity_sphere(0.37) == 0.37);
  REQUIRE_THROWS_AS(capacity_sphere(0.0), ConfigError);
  REQUIRE_THROWS_AS(capacity_sphere(-1.0), ConfigError);
}

TEST_CASE("config validation", "[scatter]") {
  const CrossSection cs(1.0, 1.0);
  FlyConfig cfg = th::single_fly(0.01);
  REQUIRE_NOTHROW(cfg.validate(cs));

  cfg.epsilon = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(cs), ConfigError);
  cfg.epsilon = 0.01;
  cfg.sign_sigma = 2;
  REQUIRE_THROWS_AS(cfg.validate(cs), ConfigError);
  cfg.sign_sigma = -1;

  cfg.flies.push_back({{0.005, 0.3, 1.0}, 1.0});
  REQUIRE_THROWS_WITH(cfg.validate(cs), Catch::Matchers::ContainsSubstring("flies[1]"));
  cfg.flies.pop_back();

  // Disjointness: centres must stay farther apart than twice the scaled radius.
  cfg.flies.push_back({{0.3, 0.3, 0.015}, 1.0});
  REQUIRE_THROWS_WITH(cfg.validate(cs), Catch::Matchers::ContainsSubstring("overlap"));
  cfg.flies[1].center.z = 0.05;
  REQUIRE_NOTHROW(cfg.validate(cs));

  REQUIRE(std::abs(cfg.trust_region(std::sqrt(30.0)) - 0.01 * std::sqrt(30.0)) < 1e-15);
}

TEST_CASE("first-order coefficient for a single fly", "[scatter]") {
  const FlyConfig cfg = th::single_fly(0.01);
  const auto s1 = s1_coefficients(cfg, th::mono_basis());
  REQUIRE(s1.s_minus.rows() == 1);

  REQUIRE(std::abs(std::abs(s1.s_minus(0, 0)) - 3.3610890038244481) < 1e-10);
  REQUIRE(std::abs(std::abs(s1.s_minus(0, 0)) - 3.3611) < 1e-4);

  // sigma = -1 and w real at z = 0 make it purely imaginary, negative side.
  REQUIRE(std::abs(s1.s_minus(0, 0).real()) < 1e-13);
  REQUIRE(s1.s_minus(0, 0).imag() < 0.0);
  // At z = 0 the transmission correction coincides with the reflection one.
  REQUIRE(std::abs(s1.s_plus(0, 0) - s1.s_minus(0, 0)) < 1e-13);
}

TEST_CASE("first-order cancellation for the quarter-beat pair", "[scatter]") {
  const FlyConfig pair = th::cancelling_pair(0.01);
  const auto s1 = s1_coefficients(pair, th::mono_basis());
  REQUIRE(std::abs(s1.s_minus(0, 0)) < 1e-13);

  // The transmission entries add in phase instead.
  const auto single = s1_coefficients(th::single_fly(0.01), th::mono_basis());
  REQUIRE(std::abs(std::abs(s1.s_plus(0, 0)) - 2.0 * std::abs(single.s_plus(0, 0))) < 1e-10);
}

TEST_CASE("first-order covariance under axial shifts and capacity scaling", "[scatter]") {
  const auto& basis = th::mono_basis();
  FlyConfig cfg;
  cfg.epsilon = 0.01;
  cfg.flies = {{{0.3, 0.3, 0.0}, 1.0}, {{0.6, 0.45, 0.3}, 0.7}};
  const auto s1 = s1_coefficients(cfg, basis);

  FlyConfig shifted = cfg;
  const double dz = 0.37;
  for (auto& f : shifted.flies) f.center.z += dz;
  const auto s1s = s1_coefficients(shifted, basis);
  const cdouble phase = std::exp(cdouble(0.0, 2.0 * basis.beta_pro(0) * dz));
  REQUIRE(std::abs(s1s.s_minus(0, 0) - phase * s1.s_minus(0, 0)) < 1e-12);
  REQUIRE(std::abs(s1s.s_plus(0, 0) - s1.s_plus(0, 0)) < 1e-12);

  FlyConfig doubled = cfg;
  for (auto& f : doubled.flies) f.capacity *= 2.0;
  const auto s1d = s1_coefficients(doubled, basis);
  REQUIRE(std::abs(s1d.s_minus(0, 0) - 2.0 * s1.s_minus(0, 0)) < 1e-12);
}

TEST_CASE("interaction matrix structure", "[scatter]") {
  const auto& green = th::mono_green();
  const FlyConfig pair = th::cancelling_pair(0.01);
  const auto g = interaction_matrix(pair, green);
  REQUIRE(g.rows() == 2);
  REQUIRE(g(0, 1) == g(1, 0));
  REQUIRE(std::abs(g(0, 0) - green.green_reg(pair.flies[0].center)) < 1e-14);
  REQUIRE(std::abs(g(0, 1).real() - 0.1961898281243065) < 1e-10);

  FlyConfig degenerate = pair;
  degenerate.flies[1].center = degenerate.flies[0].center;
  REQUIRE_THROWS_AS(interaction_matrix(degenerate, green), CoincidentPointsError);
}

TEST_CASE("first corrector at the centres", "[scatter]") {
  const auto& basis = th::mono_basis();
  const auto& green = th::mono_green();

  const FlyConfig one = th::single_fly(0.01);
  const auto u1 = evaluate_u1(one, basis, green, 0);
  const cdouble expected = 4.0 * pi * 1.0 * mode_value(basis, 0, +1, one.flies[0].center) *
                           green.green_reg(one.flies[0].center);
  REQUIRE(std::abs(u1(0) - expected) < 1e-12);

  // Linear in the capacities; identically zero when they vanish.
  FlyConfig zero = one;
  zero.flies[0].capacity = 0.0;
  REQUIRE(std::abs(evaluate_u1(zero, basis, green, 0)(0)) == 0.0);

  FlyConfig tripled = one;
  tripled.flies[0].capacity = 3.0;
  REQUIRE(std::abs(evaluate_u1(tripled, basis, green, 0)(0) - 3.0 * u1(0)) < 1e-12);

  REQUIRE_THROWS_AS(evaluate_u1(one, basis, green, 5), ConfigError);
}

TEST_CASE("second-order coefficient for the quarter-beat pair", "[scatter]") {
  const auto s2 = s2_minus(th::cancelling_pair(0.01), th::mono_basis(), th::mono_green());
  REQUIRE(std::abs(s2(0, 0).real() - 16.572817938556227) < 1e-7);
  REQUIRE(std::abs(s2(0, 0).imag()) < 1e-7);
}

TEST_CASE("expansion coefficients are symmetric across modes", "[scatter]") {
  const auto& basis = th::duo_basis();
  FlyConfig cfg;
  cfg.epsilon = 0.005;
  cfg.flies = {{{0.3, 0.2, 0.0}, 1.0}, {{0.7, 0.3, 0.35}, 0.8}, {{0.45, 0.15, 0.8}, 1.2}};
  const auto s1 = s1_coefficients(cfg, basis);
  REQUIRE(std::abs(s1.s_minus(0, 1) - s1.s_minus(1, 0)) < 1e-12);
  const auto s2 = s2_minus(cfg, basis, th::duo_green());
  REQUIRE(std::abs(s2(0, 1) - s2(1, 0)) < 1e-10);
}

TEST_CASE("point model solves the single fly in closed form", "[scatter]") {
  const auto& basis = th::mono_basis();
  const auto& green = th::mono_green();
  const FlyConfig cfg = th::single_fly(0.01);
  const FoldySystem sys(cfg, basis, green);

  const cdouble w = mode_value(basis, 0, +1, cfg.flies[0].center);
  const cdouble tinv =
      1.0 / (4.0 * pi * cfg.flies[0].capacity * cfg.epsilon) - green.green_reg(cfg.flies[0].center);
  REQUIRE(std::abs(sys.amplitudes(0)(0) - w / tinv) < 1e-13);

  const auto rep = scattering_matrix(sys);
  REQUIRE(std::abs(rep.s_minus(0, 0) - cdouble(0.0, -1.0) * w * (w / tinv)) < 1e-13);
  // Independent two-implementation reference.
  REQUIRE(std::abs(rep.s_minus(0, 0) - cdouble(-0.001129424465672918, -0.03358792738529755)) <
          1e-10);
  REQUIRE(sys.sigma_min() > 0.0);

  REQUIRE_THROWS_AS(FoldySystem(cfg, basis, green).set_capacities({1.0, 2.0}), ConfigError);
}

TEST_CASE("point model reference for the quarter-beat pair", "[scatter]") {
  const auto rep = scattering_matrix(th::cancelling_pair(0.005), th::mono_basis(), th::mono_green());
  REQUIRE(std::abs(rep.s_minus(0, 0) -
                   cdouble(0.00041421717705265306, -1.393137125921956e-05)) < 1e-10);
}

TEST_CASE("oracle minus expansion shrinks at the expected order", "[scatter]") {
  const auto& basis = th::mono_basis();
  const auto& green = th::mono_green();
  const FlyConfig base = th::cancelling_pair(0.01);
  const auto s1 = s1_coefficients(base, basis).s_minus(0, 0);
  const auto s2 = s2_minus(base, basis, green)(0, 0);

  const std::vector<double> eps{0.02, 0.01, 0.005, 0.0025};
  std::vector<double> r1, r2;
  for (double e : eps) {
    FlyConfig cfg = base;
    cfg.epsilon = e;
    const cdouble s = scattering_matrix(cfg, basis, green).s_minus(0, 0);
    r1.push_back(std::abs(s - e * s1));
    r2.push_back(std::abs(s - e * s1 - e * e * s2));
    // Normalised third-order remainder stays bounded on the whole grid.
    const double rem = r2.back() / (e * e * e);
    REQUIRE(rem > 105.0);
    REQUIRE(rem < 118.0);
  }
  const double slope1 = fit_slope(eps, r1);
  const double slope2 = fit_slope(eps, r2);
  REQUIRE(std::abs(slope1 - 2.0) < 0.2);
  REQUIRE(std::abs(slope2 - 3.0) < 0.3);
}

TEST_CASE("scattering matrix is unitary and symmetric", "[scatter]") {
  FlyConfig mono;
  mono.epsilon = 0.01;
  mono.flies = {{{0.3, 0.3, 0.0}, 1.0}, {{0.6, 0.45, 0.3}, 0.7}, {{0.45, 0.6, 0.9}, 1.3}};
  const auto rep = scattering_matrix(mono, th::mono_basis(), th::mono_green());
  REQUIRE(rep.full_s.rows() == 2);
  REQUIRE(rep.energy_residual < 1e-10);
  REQUIRE(rep.reciprocity_residual < 1e-11);
  REQUIRE(rep.unitarity_residual < 1e-8);

  FlyConfig duo;
  duo.epsilon = 0.005;
  duo.flies = {{{0.3, 0.2, 0.0}, 1.0},
               {{0.7, 0.3, 0.35}, 0.8},
               {{0.45, 0.15, 0.8}, 1.2},
               {{0.6, 0.35, 1.2}, 1.0}};
  const auto rep2 = scattering_matrix(duo, th::duo_basis(), th::duo_green());
  REQUIRE(rep2.full_s.rows() == 4);
  REQUIRE(rep2.energy_residual < 1e-10);
  REQUIRE(rep2.reciprocity_residual < 1e-11);
  REQUIRE(rep2.unitarity_residual < 1e-8);

  // T = I + s_plus, and the transmission correction drags the phase down.
  REQUIRE(std::abs(rep.transmission()(0, 0) - (1.0 + rep.s_plus(0, 0))) < 1e-15);
  REQUIRE(rep.s_plus(0, 0).imag() < 0.0);
}

TEST_CASE("empty swarm scatters nothing", "[scatter]") {
  FlyConfig cfg;
  cfg.epsilon = 1.0;
  const auto rep = scattering_matrix(cfg, th::mono_basis(), th::mono_green());
  REQUIRE(rep.s_minus.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(std::abs(rep.transmission()(0, 0) - 1.0) == 0.0);
  REQUIRE(rep.unitarity_residual < 1e-15);
}

TEST_CASE("sign calibration is locked to -1", "[scatter]") {
  REQUIRE(calibrate_sign_sigma(th::mono_basis(), th::mono_green()) == -1);
}

TEST_CASE("normalized remainder inverts the expansion prefix", "[scatter]") {
  const double eps = 0.01, cap = 2.0;
  const int sigma = -1;
  const cdouble first(0.3, -0.2), second(-1.4, 0.5), rem(7.0, -3.0);
  const cdouble denom = double(sigma) * cdouble(0.0, 4.0 * pi) * cap;
  const cdouble s = denom * (eps * first + eps * eps * second + eps * eps * eps * rem);
  const cdouble back = normalized_remainder(s, first, second, eps, cap, sigma);
  REQUIRE(std::abs(back - rem) < 1e-9);
}

TEST_CASE("single fly cannot dodge the first-order floor", "[scatter]") {
  const auto& basis = th::mono_basis();
  const auto& green = th::mono_green();
  for (double e : {0.02, 0.01, 0.005, 0.0025}) {
    const FlyConfig cfg = th::single_fly(e);
    const cdouble s = scattering_matrix(cfg, basis, green).s_minus(0, 0);
    const double w2 = std::norm(mode_value(basis, 0, +1, cfg.flies[0].center));
    REQUIRE(std::abs(s) >= 0.5 * 4.0 * pi * cfg.flies[0].capacity * w2 * e);
  }
}
