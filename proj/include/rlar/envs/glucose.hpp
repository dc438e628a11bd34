#pragma once

#include <rlar/envs/magni.hpp>
#include <rlar/envs/plant.hpp>

namespace rlar::envs {

/// Three-state glucose/insulin model (G, X, I) driven by insulin a_I and a
/// single meal at t = 0. Only G is measured.
class GlucosePlant final : public PlantModel<GlucosePlant, 3, 1, 1> {
 public:
  explicit GlucosePlant(PlantParams params);

  PlantKind kind() const override { return PlantKind::glucose; }
  int obs_dim() const override { return 3; }
  std::vector<std::string> state_names() const override { return {"G", "X", "I"}; }
  std::vector<std::string> obs_names() const override { return {"G", "dG", "t"}; }

  template <typename T>
  Eigen::Matrix<T, 3, 1> rhs(const Eigen::Matrix<T, 3, 1>& s, const Eigen::Matrix<T, 1, 1>& a, double t,
                             const DynamicsOptions& opt) const {
    const double meal = opt.disturbance ? d0_ * std::exp(-0.01 * t) : 0.0;
    Eigen::Matrix<T, 3, 1> ds;
    ds[0] = -p1_ * (s[0] - gb_) - s[0] * s[1] + meal;
    ds[1] = -p2_ * s[1] + p3_ * (s[2] - ib_);
    ds[2] = -n_ * (s[2] - ib_) + a[0];
    return ds;
  }

  template <typename T>
  Eigen::Matrix<T, 1, 1> safety_q(const Eigen::Matrix<T, 3, 1>& s) const {
    return Eigen::Matrix<T, 1, 1>(s[0]);
  }

  template <typename T>
  T cost(const Eigen::Matrix<T, 3, 1>& s) const {
    return magni_cost(s[0]);
  }

  Vecd initial_state() const override;
  Vecd observe(const Vecd& s, const Vecd* previous, double t) const override;
  void assimilate(Vecd& model_state, const Vecd& obs) const override { model_state[0] = obs[0]; }

 private:
  double gb_, ib_, n_, p1_, p2_, p3_, d0_;
};

}  // namespace rlar::envs
