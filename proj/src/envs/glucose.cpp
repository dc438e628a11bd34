#include <rlar/envs/glucose.hpp>
#include <rlar/envs/presets.hpp>

namespace rlar::envs {

GlucosePlant::GlucosePlant(PlantParams params)
    : PlantModel(std::move(params)),
      gb_(params_.at("G_b")),
      ib_(params_.at("I_b")),
      n_(params_.at("n")),
      p1_(params_.at("p1")),
      p2_(params_.at("p2")),
      p3_(params_.at("p3")),
      d0_(params_.at("D0")) {
  actions_ = default_action_space(PlantKind::glucose);
  safety_ = default_safety(PlantKind::glucose);
  obs_scale_ = default_observation_scale(PlantKind::glucose);
}

// Zero derivatives with a_I = 0 and no meal: X = 0, I = I_b, and G = G_b
// (G is otherwise free when p1 = 0).
Vecd GlucosePlant::initial_state() const { return Eigen::Vector3d(gb_, 0.0, ib_); }

Vecd GlucosePlant::observe(const Vecd& s, const Vecd* previous, double t) const {
  const double rate = previous ? s[0] - (*previous)[0] : 0.0;
  return Eigen::Vector3d(s[0], rate, t);
}

}  // namespace rlar::envs
