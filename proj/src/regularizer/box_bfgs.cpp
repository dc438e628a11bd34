#include <rlar/regularizer/box_bfgs.hpp>

#include <cmath>

namespace rlar::regularizer {
namespace {

Vecd project(const Vecd& x, const Vecd& lo, const Vecd& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

double projected_gradient_norm(const Vecd& x, const Vecd& g, const Vecd& lo, const Vecd& hi) {
  return (x - project(x - g, lo, hi)).lpNorm<Eigen::Infinity>();
}

}  // namespace

BoxBfgsResult minimize_in_box(const Objective& f, Vecd x0, const Vecd& lo, const Vecd& hi,
                              const BoxBfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BoxBfgsResult out;
  Vecd x = project(x0, lo, hi);
  Vecd g(n);
  double fx = f(x, &g);
  Matd h = Matd::Identity(n, n);
  bool fresh = true;

  for (int it = 0; it < options.max_iterations; ++it) {
    if (projected_gradient_norm(x, g, lo, hi) <= options.gradient_tolerance * std::max(1.0, std::abs(fx))) {
      out.converged = true;
      break;
    }
    // Bound-active coordinates whose gradient pushes outward stay fixed.
    Eigen::Array<bool, Eigen::Dynamic, 1> active(n);
    for (Eigen::Index i = 0; i < n; ++i)
      active[i] = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
    const Vecd g_free = active.select(Vecd::Zero(n), g);
    Vecd d = -(h * g_free);
    d = active.select(Vecd::Zero(n), d);
    if (!(g_free.dot(d) < 0.0)) {
      h.setIdentity();
      fresh = true;
      d = -g_free;
    }
    if (fresh) {
      const double scale = d.lpNorm<Eigen::Infinity>();
      if (scale > 1.0) d /= scale;
    }

    ++out.iterations;
    double step = 1.0;
    bool accepted = false;
    Vecd x_new, g_new(n);
    double f_new = fx;
    for (int k = 0; k < options.max_backtracks; ++k, step *= 0.5) {
      x_new = project(x + step * d, lo, hi);
      f_new = f(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= fx + options.armijo * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted || (x_new - x).lpNorm<Eigen::Infinity>() == 0.0) {
      if (fresh) break;
      h.setIdentity();
      fresh = true;
      continue;
    }
    f_new = f(x_new, &g_new);
    const bool stalled = fx - f_new <= options.value_tolerance * std::max(1.0, std::abs(fx));
    const Vecd s = x_new - x;
    const Vecd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Vecd hy = h * y;
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      h.noalias() += (rho * rho * y.dot(hy) + rho) * s * s.transpose();
      h.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
      fresh = false;
    }
    x = std::move(x_new);
    g = std::move(g_new);
    fx = f_new;
    if (stalled) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  out.value = fx;
  return out;
}

}  // namespace rlar::regularizer
