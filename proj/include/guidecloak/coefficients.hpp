#pragma once

#include <Eigen/Dense>
#include <complex>

#include "flies.hpp"
#include "greens.hpp"
#include "modes.hpp"

namespace guidecloak {

// Interaction matrix over the swarm centres: G(M_m, M_n) off the diagonal and
// the regularised value G_reg(M_n) on it.
inline Eigen::MatrixXcd interaction_matrix(const FlyConfig& cfg, const GreenEvaluator& green) {
  const int n = (int)cfg.flies.size();
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i) {
    g(i, i) = green.green_reg(cfg.flies[(std::size_t)i].center);
    for (int j = i + 1; j < n; ++j) {
      const cdouble v =
          green.green(cfg.flies[(std::size_t)i].center, cfg.flies[(std::size_t)j].center);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

// Values of w_j^{direction} at every swarm centre, one column per propagating mode.
inline Eigen::MatrixXcd mode_matrix(const FlyConfig& cfg, const ModeBasis& basis, int direction) {
  const int n = (int)cfg.flies.size();
  const int j_pro = basis.n_propagating();
  Eigen::MatrixXcd w(n, j_pro);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < j_pro; ++j)
      w(i, j) = mode_value(basis, j, direction, cfg.flies[(std::size_t)i].center);
  return w;
}

struct FirstOrderCoefficients {
  Eigen::MatrixXcd s_minus;  // J x J block of the reflection expansion
  Eigen::MatrixXcd s_plus;   // J x J block of the transmission expansion
};

// First-order (in eps) scattering coefficients,
//   s1-_{jj'} = sigma 4 i pi sum_n cap_n w_j^+(M_n) w_j'^+(M_n)
//   s1+_{jj'} = sigma 4 i pi sum_n cap_n w_j^+(M_n) w_j'^-(M_n).
inline FirstOrderCoefficients s1_coefficients(const FlyConfig& cfg, const ModeBasis& basis) {
  const Eigen::MatrixXcd wp = mode_matrix(cfg, basis, +1);
  const Eigen::MatrixXcd wm = mode_matrix(cfg, basis, -1);
  Eigen::VectorXcd cap((Eigen::Index)cfg.flies.size());
  for (std::size_t n = 0; n < cfg.flies.size(); ++n)
    cap((Eigen::Index)n) = cfg.flies[n].capacity;
  const cdouble front = cdouble(0.0, 4.0 * pi) * double(cfg.sign_sigma);
  FirstOrderCoefficients out;
  out.s_minus = front * wp.transpose() * cap.asDiagonal() * wp;
  out.s_plus = front * wp.transpose() * cap.asDiagonal() * wm;
  return out;
}

// First corrector of the incident mode j evaluated at the swarm centres,
//   u_{j,1}(M_m) = 4 pi sum_n cap_n w_j^+(M_n) Gtilde(M_m, M_n),
// with Gtilde the interaction matrix above. The positive prefactor follows
// from the pinned kernel conventions and is confirmed by the point-scatterer
// oracle's second-order Taylor coefficient.
inline Eigen::VectorXcd evaluate_u1(const FlyConfig& cfg, const ModeBasis& basis,
                                    const Eigen::MatrixXcd& gtilde, int j) {
  basis.require_propagating(j);
  Eigen::VectorXcd weighted((Eigen::Index)cfg.flies.size());
  for (std::size_t n = 0; n < cfg.flies.size(); ++n)
    weighted((Eigen::Index)n) =
        cfg.flies[n].capacity * mode_value(basis, j, +1, cfg.flies[n].center);
  return 4.0 * pi * (gtilde * weighted);
}

inline Eigen::VectorXcd evaluate_u1(const FlyConfig& cfg, const ModeBasis& basis,
                                    const GreenEvaluator& green, int j) {
  return evaluate_u1(cfg, basis, interaction_matrix(cfg, green), j);
}

// Second-order reflection coefficients,
//   s2-_{jj'} = sigma 4 i pi sum_n cap_n u_{j,1}(M_n) w_j'^+(M_n).
inline Eigen::MatrixXcd s2_minus(const FlyConfig& cfg, const ModeBasis& basis,
                                 const GreenEvaluator& green) {
  const int j_pro = basis.n_propagating();
  const Eigen::MatrixXcd gtilde = interaction_matrix(cfg, green);
  const Eigen::MatrixXcd wp = mode_matrix(cfg, basis, +1);
  const cdouble front = cdouble(0.0, 4.0 * pi) * double(cfg.sign_sigma);
  Eigen::MatrixXcd out(j_pro, j_pro);
  for (int j = 0; j < j_pro; ++j) {
    const Eigen::VectorXcd u1 = evaluate_u1(cfg, basis, gtilde, j);
    for (int jp = 0; jp < j_pro; ++jp) {
      cdouble acc = 0.0;
      for (std::size_t n = 0; n < cfg.flies.size(); ++n)
        acc += cfg.flies[n].capacity * u1((Eigen::Index)n) * wp((Eigen::Index)n, jp);
      out(j, jp) = front * acc;
    }
  }
  return out;
}

}  // namespace guidecloak
