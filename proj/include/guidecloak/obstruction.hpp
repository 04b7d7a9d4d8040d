#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <tuple>
#include <vector>

#include "flies.hpp"
#include "foldy.hpp"
#include "modes.hpp"

namespace guidecloak {

// Half-length of the smallest axial slab covering every scaled obstacle,
// centred on the configuration midpoint. For equal radii this is half the
// centre span plus the scaled radius.
inline double slab_half_length(const FlyConfig& cfg) {
  if (cfg.flies.empty()) throw ConfigError("slab_half_length: no obstacles");
  double lo = std::numeric_limits<double>::max(), hi = -lo;
  for (const auto& f : cfg.flies) {
    lo = std::min(lo, f.center.z - cfg.epsilon * f.radius_bound());
    hi = std::max(hi, f.center.z + cfg.epsilon * f.radius_bound());
  }
  return 0.5 * (hi - lo);
}

struct TransmissionBound {
  double mu1 = 0.0;          // spectral threshold of the comparison problem
  double half_length = 0.0;
  bool no_blocking = false;  // k2 < mu1: nothing confined to the slab can reach T = 0
};

// Threshold mu1 = min(lambda_1 + (pi / 2L)^2, lambda_2). Wavenumbers below it
// cannot be blocked (|T| = 0) by any obstacle confined to the slab of half
// length L, however shaped.
inline TransmissionBound transmission_bound(const ModeBasis& basis, double half_length) {
  if (!(half_length > 0.0)) throw ConfigError("transmission_bound: half length must be positive");
  if (basis.size() < 2) throw ConfigError("transmission_bound: need at least two eigenvalues");
  TransmissionBound tb;
  tb.half_length = half_length;
  const double quarter = pi / (2.0 * half_length);
  tb.mu1 = std::min(basis.lambda(0) + quarter * quarter, basis.lambda(1));
  tb.no_blocking = basis.k2() < tb.mu1;
  return tb;
}

// Lazy ascending stream of the rectangle eigenvalues lambda_{p,q}.
class EigenvalueStream {
 public:
  explicit EigenvalueStream(const CrossSection& cs) : cs_(cs) {
    heap_.emplace(cs_.lambda(1, 1), 1, 1);
  }
  double next() {
    auto [lam, p, q] = heap_.top();
    heap_.pop();
    heap_.emplace(cs_.lambda(p, q + 1), p, q + 1);
    if (q == 1) heap_.emplace(cs_.lambda(p + 1, 1), p + 1, 1);
    return lam;
  }

 private:
  using Item = std::tuple<double, int, int>;
  CrossSection cs_;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap_;
};

// The `count` smallest eigenvalues of the slab comparison problem: the family
// lambda_1 + ((2n+1) pi / 2L)^2 merged with lambda_j + (n pi / L)^2 for j >= 2.
inline std::vector<double> mixed_spectrum(const ModeBasis& basis, double half_length, int count) {
  if (!(half_length > 0.0)) throw ConfigError("mixed_spectrum: half length must be positive");
  if (count < 1) throw ConfigError("mixed_spectrum: count must be >= 1");
  EigenvalueStream stream(basis.section());
  const double lambda1 = stream.next();

  // Streams: 0 = odd family on lambda_1; j >= 1 = integer family on higher
  // eigenvalues, admitted lazily through a sentinel carrying the next base.
  using Item = std::tuple<double, int, int>;  // value, stream id (-1 = sentinel), n
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  const double h = pi / half_length;
  std::vector<double> bases;
  auto odd_value = [&](int n) {
    const double s = (2 * n + 1) * 0.5 * h;
    return lambda1 + s * s;
  };
  auto family_value = [&](int id, int n) {
    const double s = n * h;
    return bases[(std::size_t)id - 1] + s * s;
  };
  heap.emplace(odd_value(0), 0, 0);
  heap.emplace(stream.next(), -1, 0);

  std::vector<double> out;
  while ((int)out.size() < count) {
    auto [val, id, n] = heap.top();
    heap.pop();
    if (id == -1) {
      bases.push_back(val);
      const int new_id = (int)bases.size();
      heap.emplace(family_value(new_id, 0), new_id, 0);
      heap.emplace(stream.next(), -1, 0);
      continue;
    }
    out.push_back(val);
    if (id == 0)
      heap.emplace(odd_value(n + 1), 0, n + 1);
    else
      heap.emplace(family_value(id, n + 1), id, n + 1);
  }
  return out;
}

struct TransmissionDeviation {
  double abs_t_minus_1 = 0.0;    // |T - 1|
  double im_s_plus = 0.0;        // sign-definite in these conventions (negative)
  double energy_residual = 0.0;  // | |R|^2 + |T|^2 - 1 |
  double c_first_order = 0.0;    // 4 pi sum cap_n |w^+(M_n)|^2
  double floor = 0.0;            // 0.5 * c_first_order * eps
  bool above_floor = false;      // |T - 1| >= floor
};

// How far a monomodal swarm is from perfect transmission. Invisibility in
// reflection cannot silence the transmission phase: |T - 1| stays of order
// c * eps with c from the first-order formula.
inline TransmissionDeviation transmission_deviation(const ScatterReport& rep,
                                                    const FlyConfig& cfg,
                                                    const ModeBasis& basis) {
  if (rep.s_minus.rows() != 1)
    throw ConfigError("transmission_deviation: expects a monomodal report");
  TransmissionDeviation td;
  const cdouble r = rep.s_minus(0, 0);
  const cdouble t = 1.0 + rep.s_plus(0, 0);
  td.abs_t_minus_1 = std::abs(rep.s_plus(0, 0));
  td.im_s_plus = rep.s_plus(0, 0).imag();
  td.energy_residual = std::abs(std::norm(r) + std::norm(t) - 1.0);
  double c = 0.0;
  for (const auto& f : cfg.flies) c += f.capacity * std::norm(mode_value(basis, 0, +1, f.center));
  td.c_first_order = 4.0 * pi * c;
  td.floor = 0.5 * td.c_first_order * cfg.epsilon;
  td.above_floor = td.abs_t_minus_1 >= td.floor;
  return td;
}

}  // namespace guidecloak
