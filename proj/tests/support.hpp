#pragma once

#include <rlar/types.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace rlar::testing {

/// Central differences of a scalar function of a vector.
inline Vecd central_difference(const std::function<double(const Vecd&)>& f, const Vecd& x, double h = 1e-6) {
  Vecd g(x.size());
  Vecd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    y[i] = xi + h;
    const double up = f(y);
    y[i] = xi - h;
    const double down = f(y);
    y[i] = xi;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), with 0 for two zero vectors.
inline double relative_error(const Vecd& a, const Vecd& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

inline Vecd random_vector(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vecd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Matd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace rlar::testing
