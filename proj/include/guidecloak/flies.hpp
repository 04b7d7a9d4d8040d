#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace guidecloak {

// Electrostatic capacity of the unit ball of radius r is r itself; scaling an
// obstacle by (1 + tau eps) scales its capacity by the same factor.
inline double capacity_sphere(double radius) {
  if (!(radius > 0.0))
    throw ConfigError("capacity_sphere: radius must be positive, got " + std::to_string(radius));
  return radius;
}

// One small obstacle: nominal centre and the capacity of its unscaled shape.
// The capacity doubles as the geometric radius bound (exact for balls).
struct Fly {
  Point3 center;
  double capacity = 1.0;

  double radius_bound() const { return capacity; }
};

// A swarm of obstacles scaled by eps, plus the global sign calibration of the
// first-order scattering formulas (fixed to -1 by the oracle comparison).
struct FlyConfig {
  std::vector<Fly> flies;
  double epsilon = 0.0;
  int sign_sigma = -1;

  // Product eps * k * max capacity; the asymptotic model is trusted for <= 0.1.
  double trust_region(double k) const {
    double cmax = 0.0;
    for (const auto& f : flies) cmax = std::max(cmax, f.capacity);
    return epsilon * k * cmax;
  }

  void validate(const CrossSection& cs, double clearance_rel = 0.02) const {
    if (!(epsilon > 0.0))
      throw ConfigError("epsilon must be positive, got " + std::to_string(epsilon));
    if (sign_sigma != 1 && sign_sigma != -1)
      throw ConfigError("sign_sigma must be +1 or -1");
    const double clearance = clearance_rel * cs.min_side();
    for (std::size_t n = 0; n < flies.size(); ++n) {
      const auto& f = flies[n];
      const std::string tag = "flies[" + std::to_string(n) + "]";
      if (!(f.capacity > 0.0)) throw ConfigError(tag + ": capacity must be positive");
      if (!cs.inside(f.center.y()))
        throw ConfigError(tag + ": centre outside the cross section");
      const double wall = cs.wall_clearance(f.center.y());
      if (wall < clearance)
        throw ConfigError(tag + ": wall clearance " + std::to_string(wall) +
                          " below the minimum " + std::to_string(clearance));
      if (wall <= epsilon * f.radius_bound())
        throw ConfigError(tag + ": scaled obstacle of radius " +
                          std::to_string(epsilon * f.radius_bound()) +
                          " does not fit inside the guide");
    }
    for (std::size_t n = 0; n < flies.size(); ++n)
      for (std::size_t m = n + 1; m < flies.size(); ++m) {
        const double d = distance(flies[n].center, flies[m].center);
        const double need =
            2.0 * epsilon * std::max(flies[n].radius_bound(), flies[m].radius_bound());
        if (d <= need)
          throw ConfigError("flies[" + std::to_string(n) + "] and flies[" + std::to_string(m) +
                            "] overlap: centre distance " + std::to_string(d) +
                            " <= " + std::to_string(need));
      }
  }
};

}  // namespace guidecloak
