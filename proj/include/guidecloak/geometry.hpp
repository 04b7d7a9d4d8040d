#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace guidecloak {

inline constexpr double pi = std::numbers::pi;

struct Vec2 {
  double y1 = 0.0;
  double y2 = 0.0;
};

// Point in the guide: transverse coordinates (y1, y2), axial coordinate z.
struct Point3 {
  double y1 = 0.0;
  double y2 = 0.0;
  double z = 0.0;

  Vec2 y() const { return {y1, y2}; }
};

inline double distance(const Point3& p, const Point3& q) {
  return std::sqrt((p.y1 - q.y1) * (p.y1 - q.y1) + (p.y2 - q.y2) * (p.y2 - q.y2) +
                   (p.z - q.z) * (p.z - q.z));
}

// Rectangular cross section (0,a) x (0,b) with sound-soft (Dirichlet) walls.
// Eigenpairs are indexed by integer pairs (p,q) >= 1:
//   lambda_pq = pi^2 (p^2/a^2 + q^2/b^2)
//   phi_pq(y) = 2/sqrt(ab) sin(p pi y1 / a) sin(q pi y2 / b),  L2-normalised.
class CrossSection {
 public:
  CrossSection(double a, double b) : a_(a), b_(b) {
    if (!(a > 0.0) || !(b > 0.0))
      throw ConfigError("cross_section: sides must be positive, got a=" + std::to_string(a) +
                        " b=" + std::to_string(b));
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double min_side() const { return a_ < b_ ? a_ : b_; }

  double lambda(int p, int q) const {
    require_indices(p, q);
    const double pa = p * pi / a_;
    const double qb = q * pi / b_;
    return pa * pa + qb * qb;
  }

  double phi(int p, int q, const Vec2& y) const {
    require_indices(p, q);
    require_inside(y);
    return norm() * std::sin(p * pi * y.y1 / a_) * std::sin(q * pi * y.y2 / b_);
  }

  Vec2 phi_grad(int p, int q, const Vec2& y) const {
    require_indices(p, q);
    require_inside(y);
    const double s1 = std::sin(p * pi * y.y1 / a_), c1 = std::cos(p * pi * y.y1 / a_);
    const double s2 = std::sin(q * pi * y.y2 / b_), c2 = std::cos(q * pi * y.y2 / b_);
    return {norm() * (p * pi / a_) * c1 * s2, norm() * (q * pi / b_) * s1 * c2};
  }

  // Closed rectangle; wall points are legal evaluation points (phi vanishes there).
  bool inside(const Vec2& y, double margin = 0.0) const {
    return y.y1 >= margin && y.y1 <= a_ - margin && y.y2 >= margin && y.y2 <= b_ - margin;
  }

  double wall_clearance(const Vec2& y) const {
    const double d1 = std::min(y.y1, a_ - y.y1);
    const double d2 = std::min(y.y2, b_ - y.y2);
    return std::min(d1, d2);
  }

  bool operator==(const CrossSection& o) const { return a_ == o.a_ && b_ == o.b_; }

 private:
  double norm() const { return 2.0 / std::sqrt(a_ * b_); }

  void require_indices(int p, int q) const {
    if (p < 1 || q < 1)
      throw ConfigError("eigenpair indices must satisfy p,q >= 1, got p=" + std::to_string(p) +
                        " q=" + std::to_string(q));
  }

  void require_inside(const Vec2& y) const {
    if (!inside(y))
      throw ConfigError("point (" + std::to_string(y.y1) + ", " + std::to_string(y.y2) +
                        ") lies outside the cross section");
  }

  double a_;
  double b_;
};

}  // namespace guidecloak
