#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "modes.hpp"

namespace guidecloak {

struct GreenParams {
  // Absolute budget for the neglected modal tail of one evaluation.
  double mode_cutoff = 1e-12;
  // Axial offsets (descending) used to regularise at the source point;
  // empty selects {0.1, 0.05, 0.025, 0.0125} * min side.
  std::vector<double> reg_offsets;
  // Refuse evaluations whose certified truncation would exceed this many terms.
  double max_terms = 5e8;
  // Cache key resolution, relative to the smaller side.
  double cache_resolution_rel = 1e-9;
};

// Free-space outgoing kernel, -exp(ikr)/(4 pi r).
inline cdouble freespace_kernel(double k, double r) {
  return -std::exp(cdouble(0.0, k * r)) / (4.0 * pi * r);
}

// Outgoing Green's function of the guide, (Delta + k^2) G = delta, via the
// transverse eigenexpansion
//   G(x,x') = sum_j phi_j(y) phi_j(y') exp(i beta_j |z-z'|) / (2 i beta_j).
// Evanescent terms decay like exp(-sqrt(lambda-k2)|z-z'|); the series is cut
// once an integral comparison bound certifies the remainder below mode_cutoff.
class GreenEvaluator {
 public:
  explicit GreenEvaluator(const ModeBasis& basis, GreenParams params = {})
      : basis_(&basis), prm_(std::move(params)) {
    const double side = basis.section().min_side();
    if (prm_.reg_offsets.empty())
      prm_.reg_offsets = {0.1 * side, 0.05 * side, 0.025 * side, 0.0125 * side};
    validate_offsets();
    if (!(prm_.mode_cutoff > 0.0)) throw ConfigError("green: mode_cutoff must be positive");
    cache_res_ = prm_.cache_resolution_rel * side;
  }

  const ModeBasis& basis() const { return *basis_; }
  const GreenParams& params() const { return prm_; }

  cdouble green(const Point3& x, const Point3& xs) const {
    const auto& cs = basis_->section();
    if (!cs.inside(x.y()) || !cs.inside(xs.y()))
      throw ConfigError("green: evaluation point outside the cross section");
    const double r = distance(x, xs);
    if (r <= 1e-12 * cs.min_side())
      throw CoincidentPointsError("green: x and x' coincide (|x-x'|=" + std::to_string(r) + ")");
    return modal_sum(x.y(), xs.y(), std::abs(x.z - xs.z));
  }

  cdouble operator()(const Point3& x, const Point3& xs) const { return green(x, xs); }

  struct RegResult {
    cdouble value;
    double err_estimate = 0.0;
  };

  // Regularised value G_reg(M) = lim_{x->M} [G(x,M) + 1/(4 pi |x-M|)].
  // Computed as the even-in-offset Richardson limit of G - freespace_kernel
  // along the axis, minus ik/(4 pi).
  RegResult green_reg_detailed(const Point3& m) const {
    const auto& cs = basis_->section();
    if (!cs.inside(m.y()))
      throw ConfigError("green_reg: point outside the cross section");
    if (cs.wall_clearance(m.y()) < 0.5 * prm_.reg_offsets.front())
      throw ConfigError("green_reg: point closer to a wall than half the largest offset");

    const double k = std::sqrt(basis_->k2());
    const int n = (int)prm_.reg_offsets.size();
    std::vector<double> t(n);
    std::vector<cdouble> tab(n);
    for (int i = 0; i < n; ++i) {
      const double d = prm_.reg_offsets[i];
      t[i] = d * d;
      tab[i] = modal_sum(m.y(), m.y(), d) - freespace_kernel(k, d);
    }

    // Neville at t = 0; the difference G - kernel is even and smooth in the
    // offset, so polynomial order climbs two per node.
    cdouble diag_prev = tab[0];
    double corr_prev = 0.0;
    for (int c = 1; c < n; ++c) {
      for (int i = 0; i + c < n; ++i)
        tab[i] = (t[i + c] * tab[i] - t[i] * tab[i + 1]) / (t[i + c] - t[i]);
      const double corr = std::abs(tab[0] - diag_prev);
      if (c > 1 && corr > corr_prev && corr > 1e-9 * (1.0 + std::abs(tab[0])))
        throw ExtrapolationDivergedError(
            "green_reg: extrapolation corrections stopped contracting (" +
            std::to_string(corr_prev) + " -> " + std::to_string(corr) + ")");
      diag_prev = tab[0];
      corr_prev = corr;
    }
    return {tab[0] - cdouble(0.0, k / (4.0 * pi)), corr_prev + prm_.mode_cutoff};
  }

  cdouble green_reg(const Point3& m) const {
    const Key key = make_key(m);
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    const cdouble value = green_reg_detailed(m).value;
    std::unique_lock lock(mutex_);
    cache_.emplace(key, value);
    return value;
  }

 private:
  struct Key {
    std::int64_t a, b, c;
    bool operator==(const Key& o) const { return a == o.a && b == o.b && c == o.c; }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = std::hash<std::int64_t>{}(k.a);
      h ^= std::hash<std::int64_t>{}(k.b) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h ^= std::hash<std::int64_t>{}(k.c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      return h;
    }
  };

  Key make_key(const Point3& p) const {
    return {std::llround(p.y1 / cache_res_), std::llround(p.y2 / cache_res_),
            std::llround(p.z / cache_res_)};
  }

  void validate_offsets() const {
    const auto& d = prm_.reg_offsets;
    if (d.size() < 2) throw ConfigError("green: need at least two regularisation offsets");
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(d[i] > 0.0)) throw ConfigError("green: offsets must be positive");
      if (i > 0 && !(d[i] < d[i - 1]))
        throw ConfigError("green: offsets must be strictly decreasing");
    }
    if (d.front() > basis_->section().min_side())
      throw ConfigError("green: largest offset exceeds the smaller side");
  }

  // Core series over (p,q) at fixed transverse points and axial gap dz > 0.
  cdouble modal_sum(const Vec2& y, const Vec2& ys, double dz) const {
    const auto& cs = basis_->section();
    const double a = cs.a(), b = cs.b(), k2 = basis_->k2();

    // Spectral radius certifying tail <= cutoff: the eigenvalue counting
    // density is at most ab/(4 pi), so the tail beyond s = sqrt(Lambda - k2)
    // is below 2 exp(-s dz) / (pi dz) (factor 2 absorbs counting fluctuation).
    double s_needed = std::sqrt(k2) + pi / cs.min_side();
    if (dz > 0.0) {
      const double arg = 2.0 / (pi * dz * prm_.mode_cutoff);
      s_needed = std::max(s_needed, std::log(arg) / dz);
    }
    const double cap_lambda = k2 + s_needed * s_needed;
    const double est_terms = a * b * cap_lambda / (4.0 * pi);
    if (dz <= 0.0 || est_terms > prm_.max_terms)
      throw NonConvergentError(
          "green: |z-z'|=" + std::to_string(dz) + " and |y-y'|=" +
          std::to_string(std::hypot(y.y1 - ys.y1, y.y2 - ys.y2)) +
          " are too small for the modal tail bound at cutoff " +
          std::to_string(prm_.mode_cutoff));

    const double w1 = pi * y.y1 / a, w1s = pi * ys.y1 / a;
    const double w2 = pi * y.y2 / b, w2s = pi * ys.y2 / b;

    // Transverse factors sin(q w2) sin(q w2') by angle-addition recurrence.
    const int q_cap = (int)std::floor(b * std::sqrt(cap_lambda - (pi / a) * (pi / a)) / pi);
    std::vector<double> tq((std::size_t)std::max(q_cap, 0) + 1, 0.0);
    {
      const double c2 = std::cos(w2), s2 = std::sin(w2);
      const double c2s = std::cos(w2s), s2s = std::sin(w2s);
      double cq = 1.0, sq = 0.0, cqs = 1.0, sqs = 0.0;
      for (int q = 1; q <= q_cap; ++q) {
        const double ncq = cq * c2 - sq * s2, nsq = sq * c2 + cq * s2;
        const double ncqs = cqs * c2s - sqs * s2s, nsqs = sqs * c2s + cqs * s2s;
        cq = ncq; sq = nsq; cqs = ncqs; sqs = nsqs;
        tq[(std::size_t)q] = sq * sqs;
      }
    }

    double acc_re = 0.0, acc_im = 0.0, acc_ev = 0.0;
    const double c1 = std::cos(w1), s1 = std::sin(w1);
    const double c1s = std::cos(w1s), s1s = std::sin(w1s);
    double cp = 1.0, sp = 0.0, cps = 1.0, sps = 0.0;
    const int p_cap = (int)std::floor(a * std::sqrt(cap_lambda - (pi / b) * (pi / b)) / pi);
    for (int p = 1; p <= p_cap; ++p) {
      const double ncp = cp * c1 - sp * s1, nsp = sp * c1 + cp * s1;
      const double ncps = cps * c1s - sps * s1s, nsps = sps * c1s + cps * s1s;
      cp = ncp; sp = nsp; cps = ncps; sps = nsps;
      const double tp = nsp * nsps;
      const double pa2 = (p * pi / a) * (p * pi / a);
      const double rem = cap_lambda - pa2;
      if (rem <= (pi / b) * (pi / b)) break;
      const int qmax = (int)std::floor(b * std::sqrt(rem) / pi);
      for (int q = 1; q <= qmax; ++q) {
        const double lam = pa2 + (q * pi / b) * (q * pi / b);
        const double t = tp * tq[(std::size_t)q];
        if (lam < k2) {
          if (k2 - lam <= 1e-12 * k2)
            throw NearCutoffError("green: eigenvalue " + std::to_string(lam) +
                                  " sits at the wavenumber cutoff");
          const double beta = std::sqrt(k2 - lam);
          acc_re += t * std::sin(beta * dz) / (2.0 * beta);
          acc_im -= t * std::cos(beta * dz) / (2.0 * beta);
        } else {
          const double s = std::sqrt(lam - k2);
          acc_ev -= t * std::exp(-s * dz) / (2.0 * s);
        }
      }
    }
    const double norm = 4.0 / (a * b);
    return {norm * (acc_re + acc_ev), norm * acc_im};
  }

  const ModeBasis* basis_;
  GreenParams prm_;
  double cache_res_;
  mutable std::unordered_map<Key, cdouble, KeyHash> cache_;
  mutable std::shared_mutex mutex_;
};

}  // namespace guidecloak
