#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Gauss-Legendre rule on [0, width], nodes found by Newton on P_n.
struct GaussRule {
  std::vector<double> x, w;

  GaussRule(int n, double width) {
    x.resize((std::size_t)n);
    w.resize((std::size_t)n);
    const double xm = 0.5 * width, xl = 0.5 * width;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) < 1e-15) break;
      }
      x[(std::size_t)i] = xm - xl * z;
      x[(std::size_t)(n - 1 - i)] = xm + xl * z;
      w[(std::size_t)i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
      w[(std::size_t)(n - 1 - i)] = w[(std::size_t)i];
    }
  }
};

// Tensor-product integral of f(y1, y2) over (0,a) x (0,b).
template <typename F>
double integrate_2d(F f, double a, double b, int n = 48) {
  const GaussRule gx(n, a), gy(n, b);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      acc += gx.w[(std::size_t)i] * gy.w[(std::size_t)j] *
             f(gx.x[(std::size_t)i], gy.x[(std::size_t)j]);
  return acc;
}
