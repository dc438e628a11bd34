#include <rlar/envs/cstr.hpp>
#include <rlar/envs/newton.hpp>
#include <rlar/envs/presets.hpp>

namespace rlar::envs {

CstrPlant::CstrPlant(PlantParams params)
    : PlantModel(std::move(params)),
      k0_ab_(params_.at("k0_ab")),
      k0_bc_(params_.at("k0_bc")),
      k0_ad_(params_.at("k0_ad")),
      e_ab_(params_.at("E_A_ab")),
      e_bc_(params_.at("E_A_bc")),
      e_ad_(params_.at("E_A_ad")),
      h_ab_(params_.at("H_R_ab")),
      h_bc_(params_.at("H_R_bc")),
      h_ad_(params_.at("H_R_ad")),
      rho_(params_.at("rho")),
      cp_(params_.at("C_p")),
      cpk_(params_.at("C_p_k")),
      ar_(params_.at("A_R")),
      vr_(params_.at("V_R")),
      mk_(params_.at("m_k")),
      t_in_(params_.at("T_in")),
      kw_(params_.at("K_w")),
      ca0_(params_.at("C_A0")),
      alpha_(params_.at("alpha")),
      beta_(params_.at("beta")) {
  actions_ = default_action_space(PlantKind::cstr);
  safety_ = default_safety(PlantKind::cstr);
  obs_scale_ = default_observation_scale(PlantKind::cstr);
}

CstrPlant::Equilibrium CstrPlant::equilibrium() const {
  using Dual = Eigen::AutoDiffScalar<Eigen::Vector4d>;
  // Unknowns z = (C_A, T_R, T_K, a_F); C_B and a_Q are pinned.
  auto system = [&](const Vecd& z, Matd& jac) -> Vecd {
    Eigen::Matrix<Dual, 4, 1> s;
    s << Dual(z[0], 4, 0), Dual(kInitialCb), Dual(z[1], 4, 1), Dual(z[2], 4, 2);
    const Eigen::Matrix<Dual, 2, 1> a(Dual(z[3], 4, 3), Dual(0.0));
    const Eigen::Matrix<Dual, 4, 1> f = rhs(s, a, 0.0, {});
    Vecd out(4);
    jac.resize(4, 4);
    for (int i = 0; i < 4; ++i) {
      out[i] = f[i].value();
      jac.row(i) = f[i].derivatives().transpose();
    }
    return out;
  };
  const NewtonResult sol = damped_newton(system, Eigen::Vector4d(0.8, 134.14, 130.0, 20.0), 1e-9, 200);
  if (!sol.converged || sol.x[3] <= 0.0)
    throw ConfigError("cstr steady-state solve did not converge (residual " + std::to_string(sol.residual_norm) +
                      ")");
  Equilibrium eq;
  eq.state = Eigen::Vector4d(sol.x[0], kInitialCb, sol.x[1], sol.x[2]);
  eq.action = Eigen::Vector2d(sol.x[3], 0.0);
  return eq;
}

}  // namespace rlar::envs
