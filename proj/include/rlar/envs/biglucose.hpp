#pragma once

#include <rlar/envs/magni.hpp>
#include <rlar/envs/plant.hpp>

namespace rlar::envs {

/// Twelve-state insulin/glucagon model. State order:
/// Q1, Q2, x1, x2, x3, S1, S2, I, Z1, Z2, N, Y. Actions (a_I, a_N).
/// Measured glucose is G = 18 Q1 / V_G.
class BiGlucosePlant final : public PlantModel<BiGlucosePlant, 12, 2, 1> {
 public:
  explicit BiGlucosePlant(PlantParams params);

  PlantKind kind() const override { return PlantKind::biglucose; }
  int obs_dim() const override { return 3; }
  std::vector<std::string> state_names() const override {
    return {"Q1", "Q2", "x1", "x2", "x3", "S1", "S2", "I", "Z1", "Z2", "N", "Y"};
  }
  std::vector<std::string> obs_names() const override { return {"G", "dG", "t"}; }

  double meal_appearance(double t) const {
    return dg_ * ag_ / (tmax_g_ * tmax_g_) * t * std::exp(-t / tmax_g_);
  }

  double c_conv() const { return c_conv_; }

  template <typename T>
  T glucose(const Eigen::Matrix<T, 12, 1>& s) const {
    return 18.0 * s[0] / vg_;
  }

  template <typename T>
  Eigen::Matrix<T, 12, 1> rhs(const Eigen::Matrix<T, 12, 1>& s, const Eigen::Matrix<T, 2, 1>& a, double t,
                              const DynamicsOptions& opt) const {
    const T& q1 = s[0];
    const T& q2 = s[1];
    const T& x1 = s[2];
    const T& x2 = s[3];
    const T& x3 = s[4];
    const T& s1 = s[5];
    const T& s2 = s[6];
    const T& ins = s[7];
    const T& z1 = s[8];
    const T& z2 = s[9];
    const T& glucagon = s[10];
    const T& y = s[11];
    const T g = glucose(s);
    const double width = opt.smooth_seams ? opt.seam_width : 0.0;
    // F01c = F01 min(1, G/81); renal clearance clamped at zero below 162 mg/dL.
    const T f01c = f01_ * (T(1) - soft_positive(T(81.0 - g), width) / 81.0);
    const T fr = 0.003 * vg_ * soft_positive(T(g - 162.0), width) / 18.0;
    const double ug = opt.disturbance ? meal_appearance(t) : 0.0;

    Eigen::Matrix<T, 12, 1> ds;
    ds[0] = -f01c - x1 * q1 + k12_ * q2 - fr + (T(1) - x3) * egp0_ + c_conv_ * ug + y * q1;
    ds[1] = x1 * q1 - (k12_ + x2) * q2;
    ds[2] = -ka1_ * x1 + kb1_ * ins;
    ds[3] = -ka2_ * x2 + kb2_ * ins;
    ds[4] = -ka3_ * x3 + kb3_ * ins;
    ds[5] = a[0] - s1 / tmax_i_;
    ds[6] = s1 / tmax_i_ - s2 / tmax_i_;
    ds[7] = s2 / (vi_ * tmax_i_) - ke_ * ins;
    ds[8] = a[1] - z1 / tmax_n_;
    ds[9] = z1 / tmax_n_ - z2 / tmax_n_;
    ds[10] = -kn_ * (glucagon - nb_) + z2 / (vn_ * tmax_n_);
    ds[11] = -p_ * y + p_ * sn_ * (glucagon - nb_);
    return ds;
  }

  template <typename T>
  Eigen::Matrix<T, 1, 1> safety_q(const Eigen::Matrix<T, 12, 1>& s) const {
    return Eigen::Matrix<T, 1, 1>(glucose(s));
  }

  template <typename T>
  T cost(const Eigen::Matrix<T, 12, 1>& s) const {
    return 10.0 * magni_cost(glucose(s));
  }

  Vecd initial_state() const override;
  Vecd observe(const Vecd& s, const Vecd* previous, double t) const override;
  void assimilate(Vecd& model_state, const Vecd& obs) const override { model_state[0] = obs[0] * vg_ / 18.0; }

 private:
  double dg_, vg_, k12_, f01_, egp0_, ag_, tmax_g_, tmax_i_, vi_, ke_, ka1_, ka2_, ka3_, kb1_, kb2_, kb3_,
      tmax_n_, kn_, vn_, p_, sn_, mg_, bw_, nb_, c_conv_;
};

}  // namespace rlar::envs
