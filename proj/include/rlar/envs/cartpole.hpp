#pragma once

#include <rlar/envs/plant.hpp>

#include <numbers>

namespace rlar::envs {

/// Cart pole (x, x_dot, theta, theta_dot) with a continuous force command
/// a_f in [-1, 1], applied as 10 a_f newtons.
class CartPolePlant final : public PlantModel<CartPolePlant, 4, 1, 2> {
 public:
  explicit CartPolePlant(PlantParams params);

  PlantKind kind() const override { return PlantKind::cartpole; }
  int obs_dim() const override { return 4; }
  std::vector<std::string> state_names() const override { return {"x", "x_dot", "theta", "theta_dot"}; }
  std::vector<std::string> obs_names() const override { return state_names(); }

  static constexpr double kForceScale = 10.0;
  static constexpr double kInitialTilt = 6.0 * std::numbers::pi / 180.0;

  template <typename T>
  Eigen::Matrix<T, 4, 1> rhs(const Eigen::Matrix<T, 4, 1>& s, const Eigen::Matrix<T, 1, 1>& a, double,
                             const DynamicsOptions&) const {
    using std::cos;
    using std::sin;
    const double total = mp_ + mc_;
    const T sin_t = sin(s[2]);
    const T cos_t = cos(s[2]);
    const T d = (kForceScale * a[0] + mp_ * l_ * s[3] * s[3] * sin_t) / total;
    const T theta_acc = (g_ * sin_t - d * cos_t) / (l_ * (4.0 / 3.0 - mp_ * cos_t * cos_t / total));
    const T x_acc = d - mp_ * l_ * theta_acc * cos_t / total;
    Eigen::Matrix<T, 4, 1> ds;
    ds << s[1], x_acc, s[3], theta_acc;
    return ds;
  }

  template <typename T>
  Eigen::Matrix<T, 2, 1> safety_q(const Eigen::Matrix<T, 4, 1>& s) const {
    return Eigen::Matrix<T, 2, 1>(s[0], s[2]);
  }

  template <typename T>
  T cost(const Eigen::Matrix<T, 4, 1>& s) const {
    using std::abs;
    const T excess = abs(s[0]) - 0.25;
    return 1000.0 * s[2] * s[2] + (excess > T(0) ? excess : T(0) * excess);
  }

  Vecd initial_state() const override;
  Vecd observe(const Vecd& s, const Vecd*, double) const override { return s; }
  void assimilate(Vecd& model_state, const Vecd& obs) const override { model_state = obs; }

 private:
  double g_, mc_, mp_, l_;
};

}  // namespace rlar::envs
