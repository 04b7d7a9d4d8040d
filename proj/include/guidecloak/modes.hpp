#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace guidecloak {

using cdouble = std::complex<double>;

struct Eigenpair {
  double lambda = 0.0;
  int p = 0;
  int q = 0;
};

struct ModeBasisOptions {
  // Number of modes to retain; 0 keeps every mode with lambda <= lambda_cutoff_factor * k2.
  int j_max = 0;
  double lambda_cutoff_factor = 50.0;
  // Reject wavenumbers closer than spectral_gap_tol_rel * k2 to any retained eigenvalue.
  double spectral_gap_tol_rel = 1e-8;
};

// Axial wavenumber sqrt(k2 - lambda) on the branch with Im >= 0.
inline cdouble axial_wavenumber(double k2, double lambda) {
  if (k2 > lambda) return {std::sqrt(k2 - lambda), 0.0};
  return {0.0, std::sqrt(lambda - k2)};
}

// Transverse eigenbasis of the guide, sorted by (lambda, p, q), with the
// propagating/evanescent split at the given k2.
class ModeBasis {
 public:
  ModeBasis(const CrossSection& cs, double k2, ModeBasisOptions opt = {}) : cs_(cs), k2_(k2) {
    if (!(k2 > 0.0)) throw ConfigError("k2 must be positive, got " + std::to_string(k2));
    if (opt.j_max < 0) throw ConfigError("j_max must be >= 0");

    double cutoff = std::max(opt.lambda_cutoff_factor * k2, cs_.lambda(1, 1));
    enumerate(cutoff);
    if (opt.j_max > 0) {
      for (int rounds = 0; (int)modes_.size() < opt.j_max && rounds < 60; ++rounds) {
        cutoff *= 2.0;
        enumerate(cutoff);
      }
      if ((int)modes_.size() < opt.j_max)
        throw ConfigError("j_max=" + std::to_string(opt.j_max) + " exceeds enumerable modes");
      modes_.resize(opt.j_max);
    }

    const double gap_tol = opt.spectral_gap_tol_rel * k2;
    for (const auto& m : modes_) {
      if (std::abs(k2 - m.lambda) <= gap_tol)
        throw NearCutoffError("k2=" + std::to_string(k2) + " is within " +
                              std::to_string(gap_tol) + " of the cutoff lambda(" +
                              std::to_string(m.p) + "," + std::to_string(m.q) + ")=" +
                              std::to_string(m.lambda));
    }
    n_pro_ = 0;
    while (n_pro_ < (int)modes_.size() && modes_[n_pro_].lambda < k2) ++n_pro_;
    if (n_pro_ == 0)
      throw RegimeError("no propagating mode: k2=" + std::to_string(k2) + " below lambda_1=" +
                        std::to_string(modes_.empty() ? 0.0 : modes_[0].lambda));
  }

  const CrossSection& section() const { return cs_; }
  double k2() const { return k2_; }
  int size() const { return (int)modes_.size(); }
  int n_propagating() const { return n_pro_; }

  // Mode indices are 0-based throughout the library.
  const Eigenpair& eigenpair(int j) const { return modes_.at(j); }
  double lambda(int j) const { return modes_.at(j).lambda; }
  cdouble beta(int j) const { return axial_wavenumber(k2_, modes_.at(j).lambda); }
  double beta_pro(int j) const {
    require_propagating(j);
    return std::sqrt(k2_ - modes_[j].lambda);
  }
  double phi(int j, const Vec2& y) const {
    const auto& m = modes_.at(j);
    return cs_.phi(m.p, m.q, y);
  }
  Vec2 phi_grad(int j, const Vec2& y) const {
    const auto& m = modes_.at(j);
    return cs_.phi_grad(m.p, m.q, y);
  }

  void require_propagating(int j) const {
    if (j < 0 || j >= n_pro_)
      throw ConfigError("mode " + std::to_string(j) + " is not propagating (n_pro=" +
                        std::to_string(n_pro_) + ")");
  }

 private:
  void enumerate(double cutoff) {
    modes_.clear();
    const int pmax = (int)std::floor(cs_.a() * std::sqrt(cutoff) / pi);
    for (int p = 1; p <= pmax; ++p) {
      const double pa = p * pi / cs_.a();
      const double rem = cutoff - pa * pa;
      if (rem < 0.0) break;
      const int qmax = (int)std::floor(cs_.b() * std::sqrt(rem) / pi);
      for (int q = 1; q <= qmax; ++q) modes_.push_back({cs_.lambda(p, q), p, q});
    }
    std::sort(modes_.begin(), modes_.end(), [](const Eigenpair& l, const Eigenpair& r) {
      if (l.lambda != r.lambda) return l.lambda < r.lambda;
      if (l.p != r.p) return l.p < r.p;
      return l.q < r.q;
    });
  }

  CrossSection cs_;
  double k2_;
  std::vector<Eigenpair> modes_;
  int n_pro_ = 0;
};

// Normalised guided wave w_j^{+-}(y,z) = (2|beta_j|)^{-1/2} exp(+-i beta_j z) phi_j(y).
inline cdouble mode_value(const ModeBasis& basis, int j, int direction, const Point3& x) {
  if (direction != +1 && direction != -1) throw ConfigError("mode direction must be +1 or -1");
  const cdouble beta = basis.beta(j);
  const double scale = 1.0 / std::sqrt(2.0 * std::abs(beta));
  const cdouble phase = std::exp(cdouble(0.0, double(direction)) * beta * x.z);
  return scale * basis.phi(j, x.y()) * phase;
}

// Gradient (d/dy1, d/dy2, d/dz) of the same wave.
inline std::array<cdouble, 3> mode_gradient(const ModeBasis& basis, int j, int direction,
                                            const Point3& x) {
  if (direction != +1 && direction != -1) throw ConfigError("mode direction must be +1 or -1");
  const cdouble beta = basis.beta(j);
  const double scale = 1.0 / std::sqrt(2.0 * std::abs(beta));
  const cdouble phase = std::exp(cdouble(0.0, double(direction)) * beta * x.z);
  const Vec2 g = basis.phi_grad(j, x.y());
  const double f = basis.phi(j, x.y());
  return {scale * g.y1 * phase, scale * g.y2 * phase,
          scale * f * cdouble(0.0, double(direction)) * beta * phase};
}

}  // namespace guidecloak
