#include <rlar/envs/biglucose.hpp>
#include <rlar/envs/newton.hpp>
#include <rlar/envs/presets.hpp>

namespace rlar::envs {

BiGlucosePlant::BiGlucosePlant(PlantParams params)
    : PlantModel(std::move(params)),
      dg_(params_.at("D_G")),
      vg_(params_.at("V_G")),
      k12_(params_.at("k12")),
      f01_(params_.at("F01")),
      egp0_(params_.at("EGP0")),
      ag_(params_.at("A_G")),
      tmax_g_(params_.at("t_max_G")),
      tmax_i_(params_.at("t_max_I")),
      vi_(params_.at("V_I")),
      ke_(params_.at("k_e")),
      ka1_(params_.at("k_a1")),
      ka2_(params_.at("k_a2")),
      ka3_(params_.at("k_a3")),
      kb1_(params_.at("k_b1")),
      kb2_(params_.at("k_b2")),
      kb3_(params_.at("k_b3")),
      tmax_n_(params_.at("t_max_N")),
      kn_(params_.at("k_N")),
      vn_(params_.at("V_N")),
      p_(params_.at("p")),
      sn_(params_.at("S_N")),
      mg_(params_.at("M_g")),
      bw_(params_.at("BW")),
      nb_(params_.at("N_b")) {
  // Meal mass D_G is in kg; U_G is converted to mmol/(kg min) of glucose.
  auto it = params_.values.find("c_conv");
  c_conv_ = it != params_.values.end() ? it->second : 1e6 / (mg_ * bw_);
  actions_ = default_action_space(PlantKind::biglucose);
  safety_ = default_safety(PlantKind::biglucose);
  obs_scale_ = default_observation_scale(PlantKind::biglucose);
}

Vecd BiGlucosePlant::initial_state() const {
  using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 12, 1>>;
  const DynamicsOptions steady{.disturbance = false, .smooth_seams = false};
  auto system = [&](const Vecd& x, Matd& jac) -> Vecd {
    Eigen::Matrix<Dual, 12, 1> xs;
    for (int i = 0; i < 12; ++i) xs[i] = Dual(x[i], 12, i);
    const Eigen::Matrix<Dual, 2, 1> zero(Dual(0.0), Dual(0.0));
    const Eigen::Matrix<Dual, 12, 1> f = rhs(xs, zero, 0.0, steady);
    Vecd out(12);
    jac.resize(12, 12);
    for (int i = 0; i < 12; ++i) {
      out[i] = f[i].value();
      jac.row(i) = f[i].derivatives().transpose();
    }
    return out;
  };
  Vecd guess = Vecd::Zero(12);
  guess[0] = 200.0 * vg_ / 18.0;
  guess[10] = nb_;
  const NewtonResult sol = damped_newton(system, guess, 1e-13, 200);
  if (!sol.converged)
    throw ConfigError("biglucose steady-state solve did not converge (residual " +
                      std::to_string(sol.residual_norm) + ")");
  return sol.x;
}

Vecd BiGlucosePlant::observe(const Vecd& s, const Vecd* previous, double t) const {
  const double g = 18.0 * s[0] / vg_;
  const double rate = previous ? g - 18.0 * (*previous)[0] / vg_ : 0.0;
  return Eigen::Vector3d(g, rate, t);
}

}  // namespace rlar::envs
