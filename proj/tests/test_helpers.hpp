#pragma once

#include <guidecloak/guidecloak.hpp>

#include <random>

namespace th {

using namespace guidecloak;

// Shared fixtures; construction is cheap but the Green caches are worth reusing.
inline const ModeBasis& mono_basis() {
  static const ModeBasis basis(CrossSection(1.0, 1.0), 30.0);
  return basis;
}

inline const GreenEvaluator& mono_green() {
  static const GreenEvaluator green(mono_basis());
  return green;
}

inline const ModeBasis& duo_basis() {
  static const ModeBasis basis(CrossSection(1.0, 0.5), 100.0);
  return basis;
}

inline const GreenEvaluator& duo_green() {
  static const GreenEvaluator green(duo_basis());
  return green;
}

inline FlyConfig single_fly(double eps, double cap = 1.0) {
  FlyConfig cfg;
  cfg.epsilon = eps;
  cfg.flies.push_back({{0.3, 0.3, 0.0}, cap});
  return cfg;
}

// Two equal flies a quarter beat apart: the first-order reflection cancels.
inline FlyConfig cancelling_pair(double eps) {
  FlyConfig cfg;
  cfg.epsilon = eps;
  const double z2 = pi / (2.0 * mono_basis().beta_pro(0));
  cfg.flies.push_back({{0.3, 0.3, 0.0}, 1.0});
  cfg.flies.push_back({{0.3, 0.3, z2}, 1.0});
  return cfg;
}

inline Point3 random_interior(std::mt19937_64& rng, const CrossSection& cs,
                              double clearance, double z_span = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {clearance + (cs.a() - 2.0 * clearance) * u(rng),
          clearance + (cs.b() - 2.0 * clearance) * u(rng), z_span * (2.0 * u(rng) - 1.0)};
}

}  // namespace th
