#include <rlar/envs/cartpole.hpp>
#include <rlar/envs/presets.hpp>

namespace rlar::envs {

CartPolePlant::CartPolePlant(PlantParams params)
    : PlantModel(std::move(params)),
      g_(params_.at("g")),
      mc_(params_.at("m_c")),
      mp_(params_.at("m_p")),
      l_(params_.at("l")) {
  actions_ = default_action_space(PlantKind::cartpole);
  safety_ = default_safety(PlantKind::cartpole);
  obs_scale_ = default_observation_scale(PlantKind::cartpole);
}

Vecd CartPolePlant::initial_state() const { return Eigen::Vector4d(0.0, 0.0, kInitialTilt, 0.0); }

}  // namespace rlar::envs
