#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "foldy.hpp"

namespace guidecloak {

struct FixedPointOptions {
  double tol = 1e-12;
  int max_iter = 100;
  double capacity = 1.0;
  double clearance_rel = 0.02;
  std::vector<double> kappa0;  // starting point; zeros when empty
};

namespace detail {

inline Eigen::VectorXd start_kappa(const FixedPointOptions& opt, int size) {
  if (opt.kappa0.empty()) return Eigen::VectorXd::Zero(size);
  if ((int)opt.kappa0.size() != size)
    throw ConfigError("kappa0 has size " + std::to_string(opt.kappa0.size()) + ", expected " +
                      std::to_string(size));
  return Eigen::Map<const Eigen::VectorXd>(opt.kappa0.data(), size);
}

}  // namespace detail

// Optional replacement for the oracle-backed remainder, used by tests; maps
// the shape parameter tau to the normalised remainder entries.
using RemainderOverride = std::function<Eigen::VectorXcd(const Eigen::VectorXd&)>;

struct DesignReport {
  std::vector<double> kappa;       // final control parameter
  std::vector<double> tau;         // solved shape parameter
  double kappa_norm = 0.0;
  double c0 = 0.0;                 // |kappa| / eps
  int iterations = 0;
  bool converged = false;
  double contraction_max = 0.0;    // largest step ratio away from the noise floor
  double residual_abs = 0.0;       // max |s^{eps-}| at the solution, from the oracle
  double first_order_abs = 0.0;    // max |s1-| entry of the scaffold (placement identity)
  std::vector<double> step_norms;
  FlyConfig config;                // solved configuration
};

namespace detail {

// Shared fixed-point driver: steps kappa <- next(kappa), tracks contraction.
// Step ratios may transiently exceed 1 (the multimodal map mixes slowly), so
// divergence is judged against the best step seen, not the previous one.
template <typename Step>
inline void iterate_fixed_point(Eigen::VectorXd& kappa, const FixedPointOptions& opt,
                                DesignReport& rep, Step next) {
  double prev_step = 0.0;
  double best_step = std::numeric_limits<double>::max();
  for (int it = 1; it <= opt.max_iter; ++it) {
    const Eigen::VectorXd knew = next(kappa);
    const double step = (knew - kappa).norm();
    rep.step_norms.push_back(step);
    kappa = knew;
    rep.iterations = it;
    if (it >= 2 && prev_step > 100.0 * opt.tol)
      rep.contraction_max = std::max(rep.contraction_max, step / prev_step);
    if (it >= 3 && step > 100.0 * best_step && step > 10.0 * opt.tol)
      throw NonContractionError("fixed point diverges: step " + std::to_string(step) +
                                " after best step " + std::to_string(best_step));
    best_step = std::min(best_step, step);
    prev_step = step;
    if (step <= opt.tol) {
      rep.converged = true;
      return;
    }
  }
  throw MaxIterError("fixed point did not reach tol=" + std::to_string(opt.tol) + " in " +
                     std::to_string(opt.max_iter) + " iterations");
}

inline void require_monomodal(const ModeBasis& basis, const char* what) {
  if (basis.n_propagating() != 1)
    throw ConfigError(std::string(what) + " requires exactly one propagating mode, got " +
                      std::to_string(basis.n_propagating()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Position design: two equal flies on a common transverse point, the second a
// quarter wavelength (mod half) downstream so the first-order reflection
// cancels; the first fly is then nudged by eps * tau to kill the full one.
// ---------------------------------------------------------------------------

struct PositionScaffold {
  Vec2 y;
  int m = 0;
  Point3 m1, m2;
  double beta1 = 0.0;
  double phi1 = 0.0;    // phi_1(y)
  Vec2 grad_phi1;       // transverse gradient of phi_1 at y
};

inline PositionScaffold choose_positions_monomodal(const ModeBasis& basis, int m, const Vec2& y,
                                                   double clearance_rel = 0.02,
                                                   double grad_floor = 1e-9) {
  detail::require_monomodal(basis, "position design");
  if (m < 0) throw ConfigError("m must be >= 0");
  const auto& cs = basis.section();
  if (!cs.inside(y) || cs.wall_clearance(y) < clearance_rel * cs.min_side())
    throw ConfigError("design point violates the wall clearance");
  PositionScaffold sc;
  sc.y = y;
  sc.m = m;
  sc.beta1 = basis.beta_pro(0);
  sc.phi1 = basis.phi(0, y);
  sc.grad_phi1 = basis.phi_grad(0, y);
  const double g2 = sc.grad_phi1.y1 * sc.grad_phi1.y1 + sc.grad_phi1.y2 * sc.grad_phi1.y2;
  if (g2 < grad_floor * grad_floor)
    throw GradientVanishesError("grad phi_1 vanishes at the design point (|grad| = " +
                                std::to_string(std::sqrt(g2)) + ")");
  sc.m1 = {y.y1, y.y2, 0.0};
  sc.m2 = {y.y1, y.y2, (2 * m + 1) * pi / (2.0 * sc.beta1)};
  return sc;
}

// Displacement tau(kappa): transverse component along grad phi_1 controls the
// real part, axial component the imaginary part, relative to the base sum S.
inline Eigen::Vector3d position_tau(const PositionScaffold& sc, const Eigen::Vector2d& kappa,
                                    cdouble s_base) {
  const double g2 = sc.grad_phi1.y1 * sc.grad_phi1.y1 + sc.grad_phi1.y2 * sc.grad_phi1.y2;
  const double t = (sc.beta1 / sc.phi1) * (kappa(0) - s_base.real()) / g2;
  const double tz = (kappa(1) - s_base.imag()) / (sc.phi1 * sc.phi1);
  return {t * sc.grad_phi1.y1, t * sc.grad_phi1.y2, tz};
}

inline DesignReport solve_position_fixed_point(const ModeBasis& basis,
                                               const GreenEvaluator& green,
                                               const PositionScaffold& sc, double epsilon,
                                               FixedPointOptions opt = {},
                                               RemainderOverride override = {}) {
  FlyConfig base;
  base.epsilon = epsilon;
  base.flies = {{sc.m1, opt.capacity}, {sc.m2, opt.capacity}};
  base.validate(basis.section(), opt.clearance_rel);

  const cdouble w1 = mode_value(basis, 0, +1, sc.m1);
  const cdouble w2 = mode_value(basis, 0, +1, sc.m2);
  const cdouble first = w1 * w1 + w2 * w2;
  const Eigen::VectorXcd u1 = evaluate_u1(base, basis, green, 0);
  const cdouble s_base = u1(0) * w1 + u1(1) * w2;

  DesignReport rep;
  rep.first_order_abs = std::abs(s1_coefficients(base, basis).s_minus(0, 0));

  auto config_at = [&](const Eigen::Vector3d& tau) {
    FlyConfig cfg = base;
    cfg.flies[0].center.y1 += epsilon * tau(0);
    cfg.flies[0].center.y2 += epsilon * tau(1);
    cfg.flies[0].center.z += epsilon * tau(2);
    cfg.validate(basis.section(), 0.5 * opt.clearance_rel);
    return cfg;
  };

  cdouble s_solution = 0.0;
  auto step = [&](const Eigen::VectorXd& kappa) {
    const Eigen::Vector3d tau = position_tau(sc, kappa, s_base);
    cdouble rem;
    if (override) {
      rem = override(tau)(0);
    } else {
      const FlyConfig cfg = config_at(tau);
      s_solution = scattering_matrix(cfg, basis, green).s_minus(0, 0);
      rem = normalized_remainder(s_solution, first, cdouble(kappa(0), kappa(1)), epsilon,
                                 opt.capacity, base.sign_sigma);
    }
    return Eigen::Vector2d(-epsilon * rem.real(), -epsilon * rem.imag());
  };

  Eigen::VectorXd kappa = detail::start_kappa(opt, 2);
  detail::iterate_fixed_point(kappa, opt, rep, step);

  const Eigen::Vector3d tau = position_tau(sc, kappa, s_base);
  rep.config = config_at(tau);
  if (override) {
    rep.residual_abs = 0.0;
  } else {
    s_solution = scattering_matrix(rep.config, basis, green).s_minus(0, 0);
    rep.residual_abs = std::abs(s_solution);
  }
  rep.kappa = {kappa(0), kappa(1)};
  rep.tau = {tau(0), tau(1), tau(2)};
  rep.kappa_norm = kappa.norm();
  rep.c0 = rep.kappa_norm / epsilon;
  return rep;
}

// ---------------------------------------------------------------------------
// Size design: all flies stay put; the first two trade capacity through the
// scale factors (1 + tau_n eps). Placement makes the first-order sum vanish
// and the two tuned phasors span the complex plane.
// ---------------------------------------------------------------------------

enum class SizeVariant { four, three };

struct SizeScaffold {
  Vec2 y;
  int m = 0;
  SizeVariant variant = SizeVariant::four;
  std::vector<Point3> centers;  // tuned flies first
  double beta1 = 0.0;
  double phi1 = 0.0;
};

inline SizeScaffold choose_positions_size_design(const ModeBasis& basis, int m, const Vec2& y,
                                                 SizeVariant variant,
                                                 double clearance_rel = 0.02,
                                                 double node_floor = 1e-6) {
  detail::require_monomodal(basis, "size design");
  if (m < 0) throw ConfigError("m must be >= 0");
  const auto& cs = basis.section();
  if (!cs.inside(y) || cs.wall_clearance(y) < clearance_rel * cs.min_side())
    throw ConfigError("design point violates the wall clearance");
  SizeScaffold sc;
  sc.y = y;
  sc.m = m;
  sc.variant = variant;
  sc.beta1 = basis.beta_pro(0);
  sc.phi1 = basis.phi(0, y);
  if (std::abs(sc.phi1) < node_floor)
    throw ConfigError("node_floor violation: |phi_1(y)| = " + std::to_string(std::abs(sc.phi1)) +
                      " < " + std::to_string(node_floor));
  const double half = pi / (2.0 * sc.beta1);
  if (variant == SizeVariant::four) {
    const double z2 = pi / (4.0 * sc.beta1);
    const double shift = (2 * m + 1) * half;
    sc.centers = {{y.y1, y.y2, 0.0},
                  {y.y1, y.y2, z2},
                  {y.y1, y.y2, shift},
                  {y.y1, y.y2, z2 + shift}};
  } else {
    // Three flies with phases at the cube roots of unity; m plays no role.
    const double z2 = pi / (3.0 * sc.beta1);
    sc.centers = {{y.y1, y.y2, 0.0}, {y.y1, y.y2, z2}, {y.y1, y.y2, 2.0 * z2}};
  }
  return sc;
}

inline DesignReport solve_size_fixed_point(const ModeBasis& basis, const GreenEvaluator& green,
                                           const SizeScaffold& sc, double epsilon,
                                           FixedPointOptions opt = {},
                                           RemainderOverride override = {}) {
  FlyConfig base;
  base.epsilon = epsilon;
  for (const auto& c : sc.centers) base.flies.push_back({c, opt.capacity});
  base.validate(basis.section(), opt.clearance_rel);
  const int n = (int)base.flies.size();

  Eigen::VectorXcd w(n);
  for (int i = 0; i < n; ++i) w(i) = mode_value(basis, 0, +1, base.flies[(std::size_t)i].center);
  cdouble first = 0.0;
  for (int i = 0; i < n; ++i) first += w(i) * w(i);

  FoldySystem sys(base, basis, green);
  const Eigen::VectorXcd u1 = evaluate_u1(base, basis, sys.gtilde(), 0);
  cdouble s_base = 0.0;
  for (int i = 0; i < n; ++i) s_base += u1(i) * w(i);

  // tau solves A tau = kappa - (Re S, Im S), columns of A from the tuned phasors.
  Eigen::Matrix2d amat;
  amat << (w(0) * w(0)).real(), (w(1) * w(1)).real(), (w(0) * w(0)).imag(), (w(1) * w(1)).imag();
  if (std::abs(amat.determinant()) < 1e-12)
    throw ConfigError("size design: tuned phasors do not span the plane");
  const Eigen::Matrix2d amat_inv = amat.inverse();

  DesignReport rep;
  rep.first_order_abs = std::abs(s1_coefficients(base, basis).s_minus(0, 0));

  auto caps_at = [&](const Eigen::Vector2d& tau) {
    std::vector<double> caps((std::size_t)n, opt.capacity);
    for (int i = 0; i < 2; ++i) {
      const double scale = 1.0 + tau(i) * epsilon;
      if (!(scale > 0.0))
        throw NumericError("size design: scale factor 1 + tau*eps became non-positive");
      caps[(std::size_t)i] = opt.capacity * scale;
    }
    return caps;
  };

  cdouble s_solution = 0.0;
  auto step = [&](const Eigen::VectorXd& kappa) {
    const Eigen::Vector2d tau =
        amat_inv * Eigen::Vector2d(kappa(0) - s_base.real(), kappa(1) - s_base.imag());
    cdouble rem;
    if (override) {
      rem = override(tau)(0);
    } else {
      sys.set_capacities(caps_at(tau));
      s_solution = scattering_matrix(sys).s_minus(0, 0);
      rem = normalized_remainder(s_solution, first, cdouble(kappa(0), kappa(1)), epsilon,
                                 opt.capacity, base.sign_sigma);
    }
    return Eigen::Vector2d(-epsilon * rem.real(), -epsilon * rem.imag());
  };

  Eigen::VectorXd kappa = detail::start_kappa(opt, 2);
  detail::iterate_fixed_point(kappa, opt, rep, step);

  const Eigen::Vector2d tau =
      amat_inv * Eigen::Vector2d(kappa(0) - s_base.real(), kappa(1) - s_base.imag());
  const auto caps = caps_at(tau);
  rep.config = base;
  for (int i = 0; i < n; ++i) rep.config.flies[(std::size_t)i].capacity = caps[(std::size_t)i];
  if (override) {
    rep.residual_abs = 0.0;
  } else {
    sys.set_capacities(caps);
    s_solution = scattering_matrix(sys).s_minus(0, 0);
    rep.residual_abs = std::abs(s_solution);
  }
  rep.kappa = {kappa(0), kappa(1)};
  rep.tau = {tau(0), tau(1)};
  rep.kappa_norm = kappa.norm();
  rep.c0 = rep.kappa_norm / epsilon;
  return rep;
}

// ---------------------------------------------------------------------------
// Multimodal design: P = J(J+1)/2 reflection entries, controlled by 2P tuned
// flies out of N = 2^{P+1} P placed ones.
// ---------------------------------------------------------------------------

struct GammaSet {
  std::vector<double> gammas;             // sorted ascending
  std::vector<std::pair<int, int>> pairs; // (j, j') with j <= j', matching gammas
};

// Distinct beat frequencies gamma_p = beta_j + beta_j' over propagating pairs.
inline GammaSet compute_gammas(const ModeBasis& basis, double gap_tol_rel = 1e-8) {
  const int j_pro = basis.n_propagating();
  GammaSet gs;
  for (int j = 0; j < j_pro; ++j)
    for (int jp = j; jp < j_pro; ++jp) {
      gs.gammas.push_back(basis.beta_pro(j) + basis.beta_pro(jp));
      gs.pairs.emplace_back(j, jp);
    }
  std::vector<std::size_t> order(gs.gammas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return gs.gammas[l] < gs.gammas[r]; });
  GammaSet out;
  for (auto i : order) {
    out.gammas.push_back(gs.gammas[i]);
    out.pairs.push_back(gs.pairs[i]);
  }
  const double tol = gap_tol_rel * out.gammas.back();
  for (std::size_t i = 1; i < out.gammas.size(); ++i)
    if (out.gammas[i] - out.gammas[i - 1] < tol)
      throw DegenerateGammaError("beat frequencies " + std::to_string(out.gammas[i - 1]) +
                                 " and " + std::to_string(out.gammas[i]) +
                                 " are degenerate (gap tol " + std::to_string(tol) + ")");
  return out;
}

inline std::uint64_t multimodal_fly_count(int j_pro) {
  if (j_pro < 1) throw ConfigError("multimodal count needs j_pro >= 1");
  const std::uint64_t p = (std::uint64_t)j_pro * (std::uint64_t)(j_pro + 1) / 2;
  if (p >= 57) throw ConfigError("multimodal count overflows for J=" + std::to_string(j_pro));
  return (p << (p + 1));
}

// Rows (cos gamma_p z_n, sin gamma_p z_n) stacked per frequency, one column per point.
inline Eigen::MatrixXd placement_matrix(const std::vector<double>& gammas,
                                        const std::vector<double>& z) {
  const int p_cnt = (int)gammas.size();
  Eigen::MatrixXd b(2 * p_cnt, (Eigen::Index)z.size());
  for (int p = 0; p < p_cnt; ++p)
    for (std::size_t n = 0; n < z.size(); ++n) {
      b(2 * p, (Eigen::Index)n) = std::cos(gammas[(std::size_t)p] * z[n]);
      b(2 * p + 1, (Eigen::Index)n) = std::sin(gammas[(std::size_t)p] * z[n]);
    }
  return b;
}

inline double default_min_gap(const std::vector<double>& gammas) {
  return 1e-3 * (2.0 * pi / gammas.back());
}

struct PlacementSearchOptions {
  int grid_size = 0;       // 0: max(64, 16 P)
  double svd_floor = 1e-3;
  double d_min = 0.0;      // 0: default_min_gap
  int max_attempts = 200;
  std::uint64_t seed = 0;
};

struct PlacementBasis {
  std::vector<double> z;  // 2P tuned positions
  Eigen::MatrixXd b;      // square placement matrix at those positions
  double sigma_min = 0.0;
};

// Greedy sigma_min-maximising selection of 2P points over one period of the
// slowest beat, with a seeded random restart if the grid never clears the floor.
inline PlacementBasis build_invertible_B(const std::vector<double>& gammas,
                                         PlacementSearchOptions opt = {}) {
  if (gammas.empty()) throw ConfigError("build_invertible_B: no beat frequencies");
  const int p_cnt = (int)gammas.size();
  const int want = 2 * p_cnt;
  const int grid = opt.grid_size > 0 ? opt.grid_size : std::max(64, 16 * p_cnt);
  const double period = 2.0 * pi / gammas.front();
  const double d_min = opt.d_min > 0.0 ? opt.d_min : default_min_gap(gammas);
  std::mt19937_64 rng(opt.seed);

  auto try_candidates = [&](const std::vector<double>& cand) -> PlacementBasis {
    std::vector<double> chosen;
    for (int t = 0; t < want; ++t) {
      double best_sigma = -1.0;
      double best_z = 0.0;
      for (double zc : cand) {
        bool clash = false;
        for (double zs : chosen)
          if (std::abs(zc - zs) < d_min) { clash = true; break; }
        if (clash) continue;
        std::vector<double> trial = chosen;
        trial.push_back(zc);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(placement_matrix(gammas, trial));
        const double sigma = svd.singularValues()((Eigen::Index)trial.size() - 1);
        if (sigma > best_sigma) {
          best_sigma = sigma;
          best_z = zc;
        }
      }
      if (best_sigma < 0.0) return {};
      chosen.push_back(best_z);
    }
    PlacementBasis out;
    out.z = chosen;
    out.b = placement_matrix(gammas, chosen);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.b);
    out.sigma_min = svd.singularValues()(want - 1);
    return out;
  };

  std::vector<double> cand((std::size_t)grid);
  for (int i = 0; i < grid; ++i) cand[(std::size_t)i] = period * i / grid;
  PlacementBasis best = try_candidates(cand);
  if (!best.z.empty() && best.sigma_min >= opt.svd_floor) return best;

  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    std::uniform_real_distribution<double> u(0.0, period);
    for (auto& zc : cand) zc = u(rng);
    PlacementBasis trial = try_candidates(cand);
    if (!trial.z.empty() && trial.sigma_min >= opt.svd_floor) return trial;
    if (!trial.z.empty() && trial.sigma_min > best.sigma_min) best = trial;
  }
  throw SearchExhaustedError("placement search stalled at sigma_min = " +
                             std::to_string(best.z.empty() ? 0.0 : best.sigma_min) +
                             " (floor " + std::to_string(opt.svd_floor) + ")");
}

// P doubling rounds: round p copies the current set shifted by an odd multiple
// of pi / gamma_p, flipping that beat's phasor sum to zero while preserving
// the zeros already installed. The smallest shift keeping the minimum gap is taken.
inline std::vector<double> doubling_placement(const std::vector<double>& gammas,
                                              std::vector<double> z, double d_min = 0.0) {
  if (z.empty()) throw ConfigError("doubling_placement: empty seed");
  if (d_min <= 0.0) d_min = default_min_gap(gammas);
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j)
      if (std::abs(z[i] - z[j]) < d_min)
        throw ConfigError("doubling_placement: seed points closer than d_min");
  for (double gamma : gammas) {
    const std::size_t cur = z.size();
    long m = 0;
    double shift = 0.0;
    for (;; ++m) {
      if (m > 1000000) throw SearchExhaustedError("doubling_placement: no admissible shift");
      shift = (2 * m + 1) * pi / gamma;
      bool ok = true;
      for (std::size_t i = 0; i < cur && ok; ++i)
        for (std::size_t j = 0; j < cur; ++j)
          if (std::abs(z[i] + shift - z[j]) < d_min) { ok = false; break; }
      if (ok) break;
    }
    for (std::size_t i = 0; i < cur; ++i) z.push_back(z[i] + shift);
  }
  return z;
}

struct MultimodalPlan {
  Vec2 y;
  GammaSet gamma_set;
  PlacementBasis tuned;          // 2P tuned positions and the placement matrix
  std::vector<double> z_all;     // all N axial positions, tuned first
  std::vector<double> c_coeff;   // c_p = phi_j phi_j' / (2 sqrt(beta_j beta_j'))
  int j_pro = 0, p_cnt = 0, n_flies = 0;
};

// Transverse point maximising the smallest |phi_j| over the propagating modes.
inline Vec2 multimodal_transverse_point(const ModeBasis& basis, double clearance_rel = 0.02,
                                        int grid = 41) {
  const auto& cs = basis.section();
  const double ca = clearance_rel * cs.min_side();
  Vec2 best{0.5 * cs.a(), 0.5 * cs.b()};
  double best_val = -1.0;
  for (int i = 0; i < grid; ++i)
    for (int k = 0; k < grid; ++k) {
      const Vec2 y{ca + (cs.a() - 2 * ca) * i / (grid - 1.0),
                   ca + (cs.b() - 2 * ca) * k / (grid - 1.0)};
      double v = std::numeric_limits<double>::max();
      for (int j = 0; j < basis.n_propagating(); ++j) v = std::min(v, std::abs(basis.phi(j, y)));
      if (v > best_val) {
        best_val = v;
        best = y;
      }
    }
  return best;
}

inline MultimodalPlan plan_multimodal(const ModeBasis& basis, const Vec2& y,
                                      PlacementSearchOptions opt = {},
                                      double gap_tol_rel = 1e-8, double node_floor = 1e-6) {
  MultimodalPlan plan;
  plan.y = y;
  plan.gamma_set = compute_gammas(basis, gap_tol_rel);
  plan.j_pro = basis.n_propagating();
  plan.p_cnt = (int)plan.gamma_set.gammas.size();
  for (int j = 0; j < plan.j_pro; ++j)
    if (std::abs(basis.phi(j, y)) < node_floor)
      throw ConfigError("node_floor violation for mode " + std::to_string(j) +
                        " at the design point");
  plan.tuned = build_invertible_B(plan.gamma_set.gammas, opt);
  const double d_min = opt.d_min > 0.0 ? opt.d_min : default_min_gap(plan.gamma_set.gammas);
  plan.z_all = doubling_placement(plan.gamma_set.gammas, plan.tuned.z, d_min);
  plan.n_flies = (int)plan.z_all.size();
  for (const auto& [j, jp] : plan.gamma_set.pairs)
    plan.c_coeff.push_back(basis.phi(j, y) * basis.phi(jp, y) /
                           (2.0 * std::sqrt(basis.beta_pro(j) * basis.beta_pro(jp))));
  return plan;
}

inline DesignReport solve_multimodal_fixed_point(const ModeBasis& basis,
                                                 const GreenEvaluator& green,
                                                 const MultimodalPlan& plan, double epsilon,
                                                 FixedPointOptions opt = {},
                                                 RemainderOverride override = {}) {
  const int n = plan.n_flies;
  const int p_cnt = plan.p_cnt;
  const int tuned = 2 * p_cnt;

  FlyConfig base;
  base.epsilon = epsilon;
  for (int i = 0; i < n; ++i)
    base.flies.push_back({{plan.y.y1, plan.y.y2, plan.z_all[(std::size_t)i]}, opt.capacity});
  base.validate(basis.section(), opt.clearance_rel);

  FoldySystem sys(base, basis, green);
  const Eigen::MatrixXcd wp = mode_matrix(base, basis, +1);  // n x J

  // Base sums entering the eps and eps^2 prefix, one per beat frequency.
  Eigen::VectorXcd first(p_cnt), s_base(p_cnt);
  for (int p = 0; p < p_cnt; ++p) {
    const auto [j, jp] = plan.gamma_set.pairs[(std::size_t)p];
    const Eigen::VectorXcd u1 = evaluate_u1(base, basis, sys.gtilde(), j);
    first(p) = wp.col(j).cwiseProduct(wp.col(jp)).sum();
    s_base(p) = u1.cwiseProduct(wp.col(jp)).sum();
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> b_lu(plan.tuned.b);

  auto tau_of = [&](const Eigen::VectorXd& kappa) {
    const Eigen::VectorXd bk = plan.tuned.b * kappa;
    Eigen::VectorXd v(tuned);
    for (int p = 0; p < p_cnt; ++p) {
      v(2 * p) = (bk(2 * p) - s_base(p).real()) / plan.c_coeff[(std::size_t)p];
      v(2 * p + 1) = (bk(2 * p + 1) - s_base(p).imag()) / plan.c_coeff[(std::size_t)p];
    }
    return Eigen::VectorXd(b_lu.solve(v));
  };

  // Scale factors may leave (0, inf) during iteration; the point model only
  // breaks when one vanishes.
  auto caps_at = [&](const Eigen::VectorXd& tau) {
    std::vector<double> caps((std::size_t)n, opt.capacity);
    for (int i = 0; i < tuned; ++i) {
      const double scale = 1.0 + tau(i) * epsilon;
      if (std::abs(scale) < 1e-12)
        throw NumericError("multimodal design: scale factor 1 + tau*eps vanished");
      caps[(std::size_t)i] = opt.capacity * scale;
    }
    return caps;
  };

  auto oracle_entries = [&]() {
    const Eigen::MatrixXcd smat =
        cdouble(0.0, -1.0) * (wp.transpose() * sys.solve_columns(wp));
    Eigen::VectorXcd s(p_cnt);
    for (int p = 0; p < p_cnt; ++p) {
      const auto [j, jp] = plan.gamma_set.pairs[(std::size_t)p];
      s(p) = smat(j, jp);
    }
    return s;
  };

  DesignReport rep;
  {
    const Eigen::MatrixXcd s1 = s1_coefficients(base, basis).s_minus;
    rep.first_order_abs = s1.cwiseAbs().maxCoeff();
  }

  auto step = [&](const Eigen::VectorXd& kappa) {
    const Eigen::VectorXd tau = tau_of(kappa);
    Eigen::VectorXcd rem(p_cnt);
    if (override) {
      rem = override(tau);
    } else {
      sys.set_capacities(caps_at(tau));
      const Eigen::VectorXcd s = oracle_entries();
      const Eigen::VectorXd bk = plan.tuned.b * kappa;
      for (int p = 0; p < p_cnt; ++p)
        rem(p) = normalized_remainder(s(p), first(p), cdouble(bk(2 * p), bk(2 * p + 1)),
                                      epsilon, opt.capacity, base.sign_sigma);
    }
    Eigen::VectorXd u(tuned);
    for (int p = 0; p < p_cnt; ++p) {
      u(2 * p) = rem(p).real();
      u(2 * p + 1) = rem(p).imag();
    }
    return Eigen::VectorXd(-epsilon * b_lu.solve(u));
  };

  Eigen::VectorXd kappa = detail::start_kappa(opt, tuned);
  detail::iterate_fixed_point(kappa, opt, rep, step);

  const Eigen::VectorXd tau = tau_of(kappa);
  const auto caps = caps_at(tau);
  rep.config = base;
  for (int i = 0; i < n; ++i) rep.config.flies[(std::size_t)i].capacity = caps[(std::size_t)i];
  if (override) {
    rep.residual_abs = 0.0;
  } else {
    sys.set_capacities(caps);
    rep.residual_abs = oracle_entries().cwiseAbs().maxCoeff();
  }
  rep.kappa.assign(kappa.data(), kappa.data() + kappa.size());
  rep.tau.assign(tau.data(), tau.data() + tau.size());
  rep.kappa_norm = kappa.norm();
  rep.c0 = rep.kappa_norm / epsilon;
  return rep;
}

}  // namespace guidecloak
