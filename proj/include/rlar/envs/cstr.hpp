#pragma once

#include <rlar/envs/plant.hpp>

namespace rlar::envs {

/// Continuous stirred tank reactor (C_A, C_B, T_R, T_K) with feed a_F and
/// jacket heat flow a_Q. Time is in hours; temperatures in deg C.
class CstrPlant final : public PlantModel<CstrPlant, 4, 2, 4> {
 public:
  explicit CstrPlant(PlantParams params);

  PlantKind kind() const override { return PlantKind::cstr; }
  int obs_dim() const override { return 4; }
  std::vector<std::string> state_names() const override { return {"C_A", "C_B", "T_R", "T_K"}; }
  std::vector<std::string> obs_names() const override { return state_names(); }

  static constexpr double kTargetCb = 0.6;
  static constexpr double kInitialCb = 0.5;

  template <typename T>
  Eigen::Matrix<T, 4, 1> rhs(const Eigen::Matrix<T, 4, 1>& s, const Eigen::Matrix<T, 2, 1>& a, double,
                             const DynamicsOptions&) const {
    using std::exp;
    const T& ca = s[0];
    const T& cb = s[1];
    const T& tr = s[2];
    const T& tk = s[3];
    const T& feed = a[0];
    const T& heat = a[1];
    const T kelvin = tr + 273.15;
    const T k1 = beta_ * k0_ab_ * exp(-e_ab_ / kelvin);
    const T k2 = k0_bc_ * exp(-e_bc_ / kelvin);
    const T k3 = k0_ad_ * exp(-alpha_ * e_ad_ / kelvin);
    Eigen::Matrix<T, 4, 1> ds;
    ds[0] = feed * (ca0_ - ca) - k1 * ca - k3 * ca * ca;
    ds[1] = -feed * cb + k1 * ca - k2 * cb;
    ds[2] = (k1 * ca * h_ab_ + k2 * cb * h_bc_ + k3 * ca * ca * h_ad_) / (-rho_ * cp_) +
            kw_ * ar_ * (tk - tr) / (rho_ * cp_ * vr_) + feed * (t_in_ - tr);
    ds[3] = (heat + kw_ * ar_ * (tr - tk)) / (mk_ * cpk_);
    return ds;
  }

  template <typename T>
  Eigen::Matrix<T, 4, 1> safety_q(const Eigen::Matrix<T, 4, 1>& s) const {
    return s;
  }

  template <typename T>
  T cost(const Eigen::Matrix<T, 4, 1>& s) const {
    const T e = s[1] - kTargetCb;
    return 100.0 * e * e;
  }

  /// Steady state with C_B = 0.5 and a_Q = 0, solved for (C_A, T_R, T_K, a_F).
  struct Equilibrium {
    Vecd state;
    Vecd action;
  };
  Equilibrium equilibrium() const;

  Vecd initial_state() const override { return equilibrium().state; }
  Vecd observe(const Vecd& s, const Vecd*, double) const override { return s; }
  void assimilate(Vecd& model_state, const Vecd& obs) const override { model_state = obs; }

 private:
  double k0_ab_, k0_bc_, k0_ad_, e_ab_, e_bc_, e_ad_, h_ab_, h_bc_, h_ad_, rho_, cp_, cpk_, ar_, vr_, mk_,
      t_in_, kw_, ca0_, alpha_, beta_;
};

}  // namespace rlar::envs
